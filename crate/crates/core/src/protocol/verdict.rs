use super::{ProtocolError, FAILURE_TOKEN, SUCCESS_TOKEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    Success,
    Failure,
}

/// Leftmost `[SUCCESS]` or `[FAILURE]` token wins.
///
/// Callers that want the conservative reading use
/// `parse_verdict(text).unwrap_or(Verdict::Failure)`.
pub fn parse_verdict(text: &str) -> Result<Verdict, ProtocolError> {
    match (text.find(SUCCESS_TOKEN), text.find(FAILURE_TOKEN)) {
        (Some(s), Some(f)) if f < s => Ok(Verdict::Failure),
        (Some(_), _) => Ok(Verdict::Success),
        (None, Some(_)) => Ok(Verdict::Failure),
        (None, None) => Err(ProtocolError::MalformedVerdict),
    }
}
