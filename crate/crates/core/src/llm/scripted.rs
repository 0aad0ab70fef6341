use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{truncate_at_stop, AgentRole, BackendError, Completion, CompletionBackend, CompletionRequest};

/// One scripted completion. Entries without a `qid` apply to every question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qid: Option<String>,
    pub role: AgentRole,
    pub turn: usize,
    pub text: String,
}

/// Completions keyed by `(role, turn_index)`, with optional per-role fallbacks.
///
/// File form:
///
/// ```json
/// {"strict": true,
///  "entries": [{"role": "rpa", "turn": 0, "text": "…"}],
///  "fallback": {"pea": "Thought: … Action: Calculate[1+1]"}}
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedTranscript {
    #[serde(default = "default_strict")]
    pub strict: bool,
    #[serde(default)]
    pub entries: Vec<ScriptEntry>,
    #[serde(default)]
    pub fallback: BTreeMap<AgentRole, String>,
}

fn default_strict() -> bool {
    true
}

impl ScriptedTranscript {
    pub fn new() -> Self {
        ScriptedTranscript { strict: true, ..Default::default() }
    }

    pub fn push(mut self, role: AgentRole, turn: usize, text: impl Into<String>) -> Self {
        self.entries.push(ScriptEntry { qid: None, role, turn, text: text.into() });
        self
    }

    /// Appends `texts` as turns 0, 1, … for `role`.
    pub fn turns<I, S>(mut self, role: AgentRole, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let start = self.entries.iter().filter(|e| e.role == role && e.qid.is_none()).count();
        for (i, t) in texts.into_iter().enumerate() {
            self.entries.push(ScriptEntry { qid: None, role, turn: start + i, text: t.into() });
        }
        self
    }

    pub fn fallback(mut self, role: AgentRole, text: impl Into<String>) -> Self {
        self.fallback.insert(role, text.into());
        self
    }

    pub fn load(path: &Path) -> Result<ScriptedTranscript, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub struct ScriptedBackend {
    table: HashMap<(Option<String>, AgentRole, usize), String>,
    fallback: BTreeMap<AgentRole, String>,
    strict: bool,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(transcript: ScriptedTranscript) -> Self {
        let table = transcript
            .entries
            .into_iter()
            .map(|e| ((e.qid, e.role, e.turn), e.text))
            .collect();
        ScriptedBackend {
            table,
            fallback: transcript.fallback,
            strict: transcript.strict,
            calls: AtomicUsize::new(0),
        }
    }

    /// Total completions served.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn lookup(&self, req: &CompletionRequest) -> Option<&str> {
        self.table
            .get(&(Some(req.qid.clone()), req.role, req.turn_index))
            .or_else(|| self.table.get(&(None, req.role, req.turn_index)))
            .or_else(|| self.fallback.get(&req.role))
            .map(String::as_str)
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let text = match self.lookup(req) {
            Some(t) => t,
            None if self.strict => {
                return Err(BackendError::Unscripted { role: req.role, turn_index: req.turn_index })
            }
            None => "",
        };
        Ok(Completion::text(truncate_at_stop(text, &req.stop_sequences)))
    }
}
