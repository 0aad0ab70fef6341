//! Completion backends: an OpenAI-compatible HTTP client and a scripted
//! backend for tests and replay.

mod http;
mod scripted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, HttpConfig};
pub use scripted::{ScriptEntry, ScriptedBackend, ScriptedTranscript};

/// Which agent a completion is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Rpa,
    Pea,
    React,
    Evaluator,
    Reflector,
}

impl AgentRole {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Rpa => "rpa",
            AgentRole::Pea => "pea",
            AgentRole::React => "react",
            AgentRole::Evaluator => "evaluator",
            AgentRole::Reflector => "reflector",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rpa" => Ok(AgentRole::Rpa),
            "pea" => Ok(AgentRole::Pea),
            "react" => Ok(AgentRole::React),
            "evaluator" => Ok(AgentRole::Evaluator),
            "reflector" => Ok(AgentRole::Reflector),
            other => Err(format!("unknown agent role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: "user".into(), content: content.into() }
    }
}

pub const DEFAULT_TEMPERATURE: f64 = 0.6;
pub const DEFAULT_TOP_P: f64 = 1.0;
pub const DEFAULT_MAX_COMPLETION_TOKENS: u32 = 4096;

/// One completion call. `qid`, `role` and `turn_index` identify the call for
/// scripted replay and logging; they are not sent to HTTP endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub qid: String,
    pub role: AgentRole,
    pub turn_index: usize,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub top_p: f64,
    pub stop_sequences: Vec<String>,
    pub max_completion_tokens: u32,
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn new(qid: impl Into<String>, role: AgentRole, turn_index: usize, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            qid: qid.into(),
            role,
            turn_index,
            messages: vec![Message::user(prompt)],
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            stop_sequences: Vec::new(),
            max_completion_tokens: DEFAULT_MAX_COMPLETION_TOKENS,
            seed: None,
        }
    }

    pub fn with_stops(mut self, stops: &[&str]) -> Self {
        self.stop_sequences = stops.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn prompt_text(&self) -> String {
        self.messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion { text: text.into(), prompt_tokens: None, completion_tokens: None }
    }
}

/// Transport-level failures. Content problems are protocol errors, not these.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Schema(String),
    #[error("no scripted completion for role {role}, turn {turn_index}")]
    Unscripted { role: AgentRole, turn_index: usize },
    #[error("backend configuration: {0}")]
    Config(String),
}

/// Shared by concurrent trajectories; implementations keep only per-request state.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        (**self).complete(request)
    }
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
pub fn truncate_at_stop<'a>(text: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    &text[..cut]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_truncation() {
        let stops = vec!["</Finish>".to_string(), "<|end_search_query|>".to_string()];
        assert_eq!(
            truncate_at_stop("<|begin_search_query|>x<|end_search_query|> more</Finish>", &stops),
            "<|begin_search_query|>x"
        );
        assert_eq!(truncate_at_stop("no stops", &stops), "no stops");
        assert_eq!(truncate_at_stop("abc", &[]), "abc");
    }

    #[test]
    fn role_names_round_trip() {
        for r in [AgentRole::Rpa, AgentRole::Pea, AgentRole::React, AgentRole::Evaluator, AgentRole::Reflector] {
            assert_eq!(r.as_str().parse::<AgentRole>().unwrap(), r);
        }
    }
}
