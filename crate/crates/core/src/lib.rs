//! Planner/executor agents for question answering over tools, with ReAct and
//! Reflexion baselines and a benchmark harness.
//!
//! The crate is organised by layer:
//!
//! - [`protocol`] parses and renders the text protocols the agents speak.
//! - [`context`] keeps large tool outputs out of agent transcripts.
//! - [`toolkit`] implements the thirteen tool actions.
//! - [`llm`] talks to completion backends (HTTP or scripted).
//! - [`orchestrator`] runs the agent loops.
//! - [`eval`] scores runs and builds reports.
//! - [`cli`] is the `rpreact` command line.

pub mod cli;
pub mod context;
pub mod eval;
pub mod llm;
pub mod orchestrator;
pub mod protocol;
pub mod toolkit;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/context.md")]
    mod context {}
    #[doc = include_str!("../../../book/src/tools.md")]
    mod tools {}
    #[doc = include_str!("../../../book/src/backends.md")]
    mod backends {}
    #[doc = include_str!("../../../book/src/agents.md")]
    mod agents {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
