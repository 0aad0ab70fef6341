use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CliError, RunArgs};
use crate::orchestrator::{AgentConfig, Question};

pub const ALL_DOMAINS: [&str; 6] = ["flights", "coffee", "airbnb", "yelp", "scirex", "agenda"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
    #[default]
    Both,
}

impl Difficulty {
    pub fn admits(self, difficulty: &str) -> bool {
        match self {
            Difficulty::Both => true,
            Difficulty::Easy => difficulty.eq_ignore_ascii_case("easy"),
            Difficulty::Hard => difficulty.eq_ignore_ascii_case("hard"),
        }
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            "both" => Ok(Difficulty::Both),
            other => Err(format!("unknown difficulty `{other}` (expected easy, hard or both)")),
        }
    }
}

/// Everything `run` needs. The JSON config file has the same shape, with
/// the agent limits at top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub agent: AgentConfig,
    /// Model identifier sent to the endpoint and recorded in run records.
    pub model: String,
    pub endpoint: String,
    pub api_key_env: Option<String>,
    pub domains: Vec<String>,
    pub difficulty: Difficulty,
    /// Maximum questions per domain and difficulty.
    pub limit: Option<usize>,
    pub questions: PathBuf,
    pub data_dir: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub concurrency: usize,
    pub scripted: Option<PathBuf>,
    pub worker: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            agent: AgentConfig::default(),
            model: String::new(),
            endpoint: "http://localhost:8000/v1".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            domains: ALL_DOMAINS.iter().map(|d| d.to_string()).collect(),
            difficulty: Difficulty::Both,
            limit: None,
            questions: PathBuf::from("data/questions.jsonl"),
            data_dir: None,
            prompts_dir: None,
            out: PathBuf::from("runs"),
            concurrency: 1,
            scripted: None,
            worker: None,
        }
    }
}

impl RunConfig {
    /// Config file (if any) with flags applied on top.
    pub fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &args.questions {
            cfg.questions = v.clone();
        }
        if let Some(v) = &args.model {
            cfg.model = v.clone();
        }
        if let Some(v) = &args.endpoint {
            cfg.endpoint = v.clone();
        }
        if args.api_key_env.is_some() {
            cfg.api_key_env = args.api_key_env.clone();
        }
        if let Some(v) = &args.domains {
            cfg.domains = v.iter().map(|d| d.trim().to_ascii_lowercase()).filter(|d| !d.is_empty()).collect();
        }
        if let Some(v) = args.difficulty {
            cfg.difficulty = v;
        }
        if args.limit.is_some() {
            cfg.limit = args.limit;
        }
        if let Some(v) = &args.out {
            cfg.out = v.clone();
        }
        if let Some(v) = args.concurrency {
            cfg.concurrency = v;
        }
        if args.scripted.is_some() {
            cfg.scripted = args.scripted.clone();
        }
        args.agent.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks values and that every referenced path exists.
    pub fn validate(&self) -> Result<(), CliError> {
        self.agent.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.concurrency == 0 {
            return Err(CliError::Config("concurrency must be at least 1".into()));
        }
        if let Some(d) = self.domains.iter().find(|d| !ALL_DOMAINS.contains(&d.as_str())) {
            return Err(CliError::Config(format!("unknown domain `{d}`")));
        }
        if self.scripted.is_none() && self.model.is_empty() {
            return Err(CliError::Config("--model is required unless --scripted is given".into()));
        }
        let paths = [Some(&self.questions), self.data_dir.as_ref(), self.prompts_dir.as_ref(), self.scripted.as_ref()];
        for p in paths.into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::Config(format!("{}: no such file or directory", p.display())));
            }
        }
        Ok(())
    }

    /// Model name written to run records.
    pub fn model_label(&self) -> String {
        match (&self.scripted, self.model.is_empty()) {
            (Some(_), true) => "scripted".into(),
            _ => self.model.clone(),
        }
    }

    /// Questions in the selected domains and difficulty, in file order, at
    /// most `limit` per domain and difficulty.
    pub fn select(&self, questions: Vec<Question>) -> Vec<Question> {
        let mut taken: BTreeMap<(String, String), usize> = BTreeMap::new();
        questions
            .into_iter()
            .filter(|q| self.domains.iter().any(|d| d.eq_ignore_ascii_case(&q.domain)))
            .filter(|q| self.difficulty.admits(&q.difficulty))
            .filter(|q| {
                let n = taken.entry((q.domain.to_ascii_lowercase(), q.difficulty.to_ascii_lowercase())).or_default();
                *n += 1;
                self.limit.is_none_or(|l| *n <= l)
            })
            .collect()
    }
}
