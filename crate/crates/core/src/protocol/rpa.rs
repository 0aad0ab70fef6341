use super::{
    ProtocolError, BEGIN_FINISH, BEGIN_SEARCH_QUERY, BEGIN_SEARCH_RESULT, END_FINISH,
    END_SEARCH_QUERY, END_SEARCH_RESULT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    Query,
    Finish,
}

/// One parsed planner turn.
///
/// Both `query` and `finish` may be present when the model spilled past the
/// stop sequence; `directive` says which one the framework acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpaTurn {
    pub think_text: String,
    pub query: Option<String>,
    pub finish: Option<String>,
    pub directive: Directive,
}

impl RpaTurn {
    /// The directive the framework acts on, with its text.
    pub fn effective(&self) -> (Directive, &str) {
        match self.directive {
            Directive::Query => (Directive::Query, self.query.as_deref().unwrap_or_default()),
            Directive::Finish => (Directive::Finish, self.finish.as_deref().unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    content_start: usize,
    content_end: usize,
    end: usize,
}

/// First innermost `open … close` pair at or after `from`.
fn next_pair(text: &str, open: &str, close: &str, from: usize) -> Option<Span> {
    let first_open = from + text[from..].find(open)?;
    let after_open = first_open + open.len();
    let close_at = after_open + text[after_open..].find(close)?;
    // A later opener before the closer makes that one the innermost pair.
    let start = first_open + text[first_open..close_at].rfind(open).unwrap_or(0);
    Some(Span {
        start,
        content_start: start + open.len(),
        content_end: close_at,
        end: close_at + close.len(),
    })
}

fn first_query(text: &str) -> Option<Span> {
    let mut from = 0;
    while let Some(span) = next_pair(text, BEGIN_SEARCH_QUERY, END_SEARCH_QUERY, from) {
        if !text[span.content_start..span.content_end].trim().is_empty() {
            return Some(span);
        }
        from = span.end;
    }
    None
}

fn first_finish(text: &str) -> Option<Span> {
    next_pair(text, BEGIN_FINISH, END_FINISH, 0)
}

/// Parses a planner completion.
///
/// The first complete pair in document order is the effective directive;
/// anything after it is treated as spillover past the stop sequence. Empty
/// query spans are skipped.
pub fn parse_rpa_output(text: &str) -> Result<RpaTurn, ProtocolError> {
    let query = first_query(text);
    let finish = first_finish(text);
    let (directive, span) = match (query, finish) {
        (Some(q), Some(f)) if f.start < q.start => (Directive::Finish, f),
        (Some(q), _) => (Directive::Query, q),
        (None, Some(f)) => (Directive::Finish, f),
        (None, None) => {
            return Err(ProtocolError::MalformedOutput(
                "no complete search query or Finish tag".into(),
            ))
        }
    };
    let mut rest = String::with_capacity(text.len());
    rest.push_str(&text[..span.start]);
    rest.push_str(&text[span.end..]);
    let think_text = rest.replace("<think>", "").replace("</think>", "").trim().to_string();
    let slice = |s: Span| text[s.content_start..s.content_end].trim().to_string();
    Ok(RpaTurn {
        think_text,
        query: query.map(slice),
        finish: finish.map(slice),
        directive,
    })
}

/// Wraps executor output for the planner transcript. Content is kept verbatim.
pub fn render_search_result(content: &str) -> String {
    let mut out =
        String::with_capacity(BEGIN_SEARCH_RESULT.len() + content.len() + END_SEARCH_RESULT.len());
    out.push_str(BEGIN_SEARCH_RESULT);
    out.push_str(content);
    out.push_str(END_SEARCH_RESULT);
    out
}

/// Re-appends the closing tag that a stop sequence swallowed.
///
/// Endpoints drop the matched stop string from the completion. If the text
/// already holds a complete directive it is returned unchanged; otherwise the
/// last opened directive gets its closing tag back.
pub fn close_dangling_directive(text: &str) -> String {
    if first_query(text).is_some() || first_finish(text).is_some() {
        return text.to_string();
    }
    let last_query = text.rfind(BEGIN_SEARCH_QUERY);
    let last_finish = text.rfind(BEGIN_FINISH);
    let close = match (last_query, last_finish) {
        (Some(q), Some(f)) if f > q => END_FINISH,
        (Some(_), _) => END_SEARCH_QUERY,
        (None, Some(_)) => END_FINISH,
        (None, None) => return text.to_string(),
    };
    format!("{text}{close}")
}
