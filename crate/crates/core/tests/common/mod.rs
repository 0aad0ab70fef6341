#![allow(dead_code)]

pub mod rpa_oracle;
pub mod table_oracle;

use std::path::PathBuf;
use std::sync::Arc;

use rpreact::llm::{AgentRole, ScriptedBackend, ScriptedTranscript};
use rpreact::toolkit::{DataCatalog, ToolEnvironment};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn data_dir() -> PathBuf {
    fixtures().join("data")
}

pub fn catalog() -> Arc<DataCatalog> {
    Arc::new(DataCatalog::from_dir(data_dir()))
}

pub fn env() -> ToolEnvironment {
    ToolEnvironment::without_code(catalog())
}

/// A backend that never finishes: the planner always asks another question,
/// actors always calculate, the evaluator always says failure.
pub fn never_finishing() -> Arc<ScriptedBackend> {
    let t = ScriptedTranscript::new()
        .fallback(AgentRole::Rpa, "<think>\nmore\n</think>\n<|begin_search_query|>Compute 1+1 again.<|end_search_query|>")
        .fallback(AgentRole::Pea, "Thought: keep going.\nAction: Calculate[1+1]")
        .fallback(AgentRole::React, "Thought: keep going.\nAction: Calculate[1+1]")
        .fallback(AgentRole::Evaluator, "[FAILURE]")
        .fallback(AgentRole::Reflector, "<think>hm</think>I should finish earlier.");
    Arc::new(ScriptedBackend::new(t))
}

/// Text with exactly `n_tokens` whitespace-separated tokens, built from a
/// seeded generator: mixed separators, unicode, optional leading space.
pub fn generated_text(n_tokens: usize, seed: u64) -> String {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    const WORDS: [&str; 8] = ["flight", "1425.0", "café", "☕,", "DL82", "x", "naïve", "-3.5e2"];
    const SEPS: [&str; 5] = [" ", "  ", "\n", "\t", ", "];
    let mut s = String::new();
    if rng.gen_bool(0.5) {
        s.push(' ');
    }
    for _ in 0..n_tokens {
        s.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
        if rng.gen_bool(0.3) {
            s.push_str(&rng.gen_range(0..10_000u32).to_string());
        }
        s.push_str(SEPS[rng.gen_range(0..SEPS.len())]);
    }
    s
}

/// Wraps a backend and keeps every request it served.
pub struct Recording<B> {
    pub inner: B,
    pub requests: std::sync::Mutex<Vec<rpreact::llm::CompletionRequest>>,
}

impl<B> Recording<B> {
    pub fn new(inner: B) -> Arc<Self> {
        Arc::new(Recording { inner, requests: Default::default() })
    }

    pub fn requests(&self) -> Vec<rpreact::llm::CompletionRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl<B: rpreact::llm::CompletionBackend> rpreact::llm::CompletionBackend for Recording<B> {
    fn complete(
        &self,
        request: &rpreact::llm::CompletionRequest,
    ) -> Result<rpreact::llm::Completion, rpreact::llm::BackendError> {
        self.requests.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}

pub fn transcript(name: &str) -> ScriptedTranscript {
    ScriptedTranscript::load(&fixtures().join("transcripts").join(name)).unwrap()
}
