use serde::{Deserialize, Serialize};

use crate::llm::AgentRole;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Finished,
    StepLimit,
    SearchLimit,
    BackendError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Finished => "finished",
            Termination::StepLimit => "step_limit",
            Termination::SearchLimit => "search_limit",
            Termination::BackendError => "backend_error",
        }
    }
}

/// One backend completion and what the runtime did with it. This is also the
/// JSONL log line format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub qid: String,
    pub approach: String,
    pub role: AgentRole,
    pub turn_index: usize,
    pub prompt_tokens: u64,
    pub completion_text: String,
    #[serde(default)]
    pub action: Option<String>,
    #[serde(default)]
    pub observation: Option<String>,
    /// Set only on the record that ended the trajectory.
    #[serde(default)]
    pub termination: Option<Termination>,
    /// Planner sub-query this record belongs to (executor records only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subquery_index: Option<usize>,
    /// Reflexion trial number (0-based).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    /// Variable holding the full tool output when the observation was truncated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    /// True when this completion was re-sampled because it was malformed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub malformed: bool,
    /// Wall-clock milliseconds since the Unix epoch. Kept apart from every
    /// other field so logs can be compared with it stripped.
    #[serde(default)]
    pub timestamp_ms: u64,
}

/// What an executor hands back to the planner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub content: String,
    pub succeeded: bool,
    pub steps_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub qid: String,
    pub approach: String,
    pub final_answer: Option<String>,
    pub termination: Termination,
    pub steps: Vec<StepRecord>,
    /// Backend calls made, retries included.
    pub completions: usize,
    /// Sub-queries issued by the planner (including malformed turns).
    pub rpa_queries: usize,
    /// Executor steps across all sub-queries.
    pub pea_steps: usize,
    /// Reflexion trials run.
    pub trials: usize,
    pub reflections: Vec<String>,
    pub error: Option<String>,
}

impl Trajectory {
    pub fn new(qid: &str, approach: &str) -> Self {
        Trajectory {
            qid: qid.to_string(),
            approach: approach.to_string(),
            final_answer: None,
            termination: Termination::Finished,
            steps: Vec::new(),
            completions: 0,
            rpa_queries: 0,
            pea_steps: 0,
            trials: 0,
            reflections: Vec::new(),
            error: None,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step records always serialize"));
            out.push('\n');
        }
        out
    }

    /// Tool-loop steps: executor steps for the planner approach, actor steps
    /// (over all trials) for the baselines. Re-sampled turns count once.
    pub fn steps_used(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.role, AgentRole::Pea | AgentRole::React) && !s.malformed)
            .count()
    }

    /// Steps taken by `role`, counting each re-sampled turn once.
    pub fn steps_for(&self, role: AgentRole) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(move |s| s.role == role && !s.malformed)
    }
}

pub(crate) fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
