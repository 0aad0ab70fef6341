//! Wire dialects spoken between the framework and the models.
//!
//! Two grammars live here. The planner emits tagged directives
//! (`<|begin_search_query|>…<|end_search_query|>` or `<Finish>…</Finish>`)
//! and reads back `<|begin_search_result|>…<|end_search_result|>` blocks.
//! Executors and the single-agent baselines emit `Thought … Action …` turns
//! whose action is one of thirteen bracketed tool calls.
//!
//! Everything in this module is a pure function over text.

mod action;
mod rpa;
mod verdict;

pub use action::{parse_action, parse_action_prefix, parse_pea_output, Action, ActionKind, PeaTurn};
pub use rpa::{close_dangling_directive, parse_rpa_output, render_search_result, Directive, RpaTurn};
pub use verdict::{parse_verdict, Verdict};

pub const BEGIN_SEARCH_QUERY: &str = "<|begin_search_query|>";
pub const END_SEARCH_QUERY: &str = "<|end_search_query|>";
pub const BEGIN_SEARCH_RESULT: &str = "<|begin_search_result|>";
pub const END_SEARCH_RESULT: &str = "<|end_search_result|>";
pub const BEGIN_FINISH: &str = "<Finish>";
pub const END_FINISH: &str = "</Finish>";
pub const SUCCESS_TOKEN: &str = "[SUCCESS]";
pub const FAILURE_TOKEN: &str = "[FAILURE]";

/// Stop strings for planner turns. The framework injects results, so the
/// model must stop right after closing a directive.
pub const RPA_STOP_SEQUENCES: [&str; 2] = [END_SEARCH_QUERY, END_FINISH];

/// Stop strings for executor and baseline turns.
pub const PEA_STOP_SEQUENCES: [&str; 1] = ["\nObservation"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed output: {0}")]
    MalformedOutput(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unbalanced brackets in action `{0}`")]
    UnbalancedBrackets(String),
    #[error("no [SUCCESS] or [FAILURE] verdict found")]
    MalformedVerdict,
}
