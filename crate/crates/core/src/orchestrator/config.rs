use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    #[serde(rename = "rp-react")]
    RpReact,
    #[serde(rename = "react")]
    React,
    #[serde(rename = "reflexion")]
    Reflexion,
}

impl Approach {
    pub fn as_str(self) -> &'static str {
        match self {
            Approach::RpReact => "rp-react",
            Approach::React => "react",
            Approach::Reflexion => "reflexion",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rp-react" | "rpreact" | "rp_react" => Ok(Approach::RpReact),
            "react" => Ok(Approach::React),
            "reflexion" => Ok(Approach::Reflexion),
            other => Err(format!("unknown approach `{other}` (expected rp-react, react or reflexion)")),
        }
    }
}

pub const DEFAULT_RPA_SEARCH_LIMIT: usize = 10;
pub const DEFAULT_PEA_STEP_LIMIT: usize = 10;
pub const DEFAULT_REACT_STEP_LIMIT: usize = 20;
pub const DEFAULT_MAX_REFLECTIONS: usize = 3;
pub const DEFAULT_CONTEXT_THRESHOLD: usize = 100;
/// Each turn may be re-sampled once after malformed output.
pub const RETRY_FACTOR: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub approach: Approach,
    pub rpa_search_limit: usize,
    pub pea_step_limit: usize,
    pub react_step_limit: usize,
    pub max_reflections: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub context_threshold: usize,
    pub max_completion_tokens: u32,
    pub seed: Option<u64>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            approach: Approach::RpReact,
            rpa_search_limit: DEFAULT_RPA_SEARCH_LIMIT,
            pea_step_limit: DEFAULT_PEA_STEP_LIMIT,
            react_step_limit: DEFAULT_REACT_STEP_LIMIT,
            max_reflections: DEFAULT_MAX_REFLECTIONS,
            temperature: crate::llm::DEFAULT_TEMPERATURE,
            top_p: crate::llm::DEFAULT_TOP_P,
            context_threshold: DEFAULT_CONTEXT_THRESHOLD,
            max_completion_tokens: crate::llm::DEFAULT_MAX_COMPLETION_TOKENS,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid agent config: {0}")]
pub struct ConfigError(pub String);

impl AgentConfig {
    pub fn for_approach(approach: Approach) -> Self {
        AgentConfig { approach, ..Default::default() }
    }

    /// The ReAct baseline with its step limit raised to the planner's worst case.
    pub fn react_100() -> Self {
        AgentConfig { approach: Approach::React, react_step_limit: 100, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let limits = [
            ("rpa_search_limit", self.rpa_search_limit),
            ("pea_step_limit", self.pea_step_limit),
            ("react_step_limit", self.react_step_limit),
            ("context_threshold", self.context_threshold),
        ];
        for (name, v) in limits {
            if v < 1 {
                return Err(ConfigError(format!("{name} must be at least 1")));
            }
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ConfigError("temperature must be >= 0".into()));
        }
        if self.top_p.is_nan() || self.top_p <= 0.0 || self.top_p > 1.0 {
            return Err(ConfigError("top_p must be in (0, 1]".into()));
        }
        Ok(())
    }

    /// Worst-case executor tool steps for one planner trajectory.
    pub fn worst_case_pea_steps(&self) -> usize {
        self.rpa_search_limit * self.pea_step_limit
    }

    /// Upper bound on backend calls for one planner trajectory: every planner
    /// turn (the limit plus one closing turn) and every executor step may be
    /// sampled twice.
    pub fn max_rp_react_completions(&self) -> usize {
        RETRY_FACTOR * (self.rpa_search_limit + 1) + RETRY_FACTOR * self.worst_case_pea_steps()
    }

    /// Label used in reports: `RP-ReAct`, `React`, `React-100`, `Reflexion`.
    pub fn label(&self) -> String {
        match self.approach {
            Approach::RpReact => "RP-ReAct".into(),
            Approach::Reflexion => "Reflexion".into(),
            Approach::React if self.react_step_limit == DEFAULT_REACT_STEP_LIMIT => "React".into(),
            Approach::React => format!("React-{}", self.react_step_limit),
        }
    }
}
