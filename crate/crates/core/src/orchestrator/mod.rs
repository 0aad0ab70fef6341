//! Agent loops: the planner/executor pair and the two baselines.
//!
//! Every loop is bounded by a configured limit, every backend call is
//! counted, and a malformed completion is re-sampled exactly once.

mod config;
mod prompts;
mod trajectory;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{
    Approach, AgentConfig, ConfigError, DEFAULT_CONTEXT_THRESHOLD, DEFAULT_MAX_REFLECTIONS,
    DEFAULT_PEA_STEP_LIMIT, DEFAULT_REACT_STEP_LIMIT, DEFAULT_RPA_SEARCH_LIMIT, RETRY_FACTOR,
};
pub use prompts::{render_template, PromptSet, EXAMPLE_DOMAINS};
pub use trajectory::{ExecutionResult, StepRecord, Termination, Trajectory};

use crate::context::{compose_executor_notice, ingest_tool_output, tokenize_for_threshold, Observation};
use crate::llm::{AgentRole, BackendError, CompletionBackend, CompletionRequest};
use crate::protocol::{
    close_dangling_directive, parse_pea_output, parse_rpa_output, parse_verdict, render_search_result,
    ActionKind, Directive, ProtocolError, Verdict, PEA_STOP_SEQUENCES, RPA_STOP_SEQUENCES,
};
use crate::toolkit::{ToolEnvironment, ToolOutcome};

/// One benchmark question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub qid: String,
    pub question: String,
    #[serde(default)]
    pub answer: String,
    #[serde(default)]
    pub domain: String,
    #[serde(default = "default_difficulty")]
    pub difficulty: String,
}

fn default_difficulty() -> String {
    "easy".into()
}

impl Question {
    pub fn new(qid: &str, question: &str, domain: &str) -> Self {
        Question {
            qid: qid.into(),
            question: question.into(),
            answer: String::new(),
            domain: domain.into(),
            difficulty: default_difficulty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no executor configured for domain `{0}`")]
    NoPeaConfigured(String),
}

/// One executor specialisation: the domains it serves and, optionally, its
/// own few-shot block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeaSpec {
    #[serde(default)]
    pub domains: Vec<String>,
    #[serde(default)]
    pub examples: Option<String>,
}

/// Executors available to the planner, by id.
///
/// With a single entry every sub-query goes to it. With several, the entry
/// whose `domains` lists the question's domain is used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeaRegistry {
    pub entries: BTreeMap<String, PeaSpec>,
}

impl Default for PeaRegistry {
    fn default() -> Self {
        PeaRegistry::single()
    }
}

impl PeaRegistry {
    /// One general executor using the built-in examples.
    pub fn single() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("default".to_string(), PeaSpec::default());
        PeaRegistry { entries }
    }

    pub fn empty() -> Self {
        PeaRegistry { entries: BTreeMap::new() }
    }

    pub fn with(mut self, id: &str, spec: PeaSpec) -> Self {
        self.entries.insert(id.to_string(), spec);
        self
    }

    /// Picks the executor for a question in `domain`.
    pub fn route(&self, domain: &str) -> Result<(&str, &PeaSpec), OrchestratorError> {
        if self.entries.len() == 1 {
            let (id, spec) = self.entries.iter().next().expect("len is 1");
            return Ok((id, spec));
        }
        self.entries
            .iter()
            .find(|(_, spec)| spec.domains.iter().any(|d| d.eq_ignore_ascii_case(domain)))
            .map(|(id, spec)| (id.as_str(), spec))
            .ok_or_else(|| OrchestratorError::NoPeaConfigured(domain.to_string()))
    }
}

/// Runs questions against a backend. Shareable across threads; each call
/// gets its own trajectory state.
pub struct Orchestrator {
    pub config: AgentConfig,
    pub prompts: Arc<PromptSet>,
    pub registry: PeaRegistry,
    backend: Arc<dyn CompletionBackend>,
}

impl std::fmt::Debug for Orchestrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Orchestrator")
            .field("config", &self.config)
            .field("registry", &self.registry)
            .finish_non_exhaustive()
    }
}

impl Orchestrator {
    pub fn new(config: AgentConfig, backend: Arc<dyn CompletionBackend>) -> Result<Self, OrchestratorError> {
        config.validate()?;
        Ok(Orchestrator {
            config,
            prompts: Arc::new(PromptSet::default()),
            registry: PeaRegistry::single(),
            backend,
        })
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = Arc::new(prompts);
        self
    }

    pub fn with_registry(mut self, registry: PeaRegistry) -> Self {
        self.registry = registry;
        self
    }

    /// Runs `question` with the configured approach.
    pub fn run(&self, question: &Question, env: &mut ToolEnvironment) -> Result<Trajectory, OrchestratorError> {
        match self.config.approach {
            Approach::RpReact => self.run_rp_react(question, env),
            Approach::React => Ok(self.run_react(question, env)),
            Approach::Reflexion => Ok(self.run_reflexion(question, env)),
        }
    }

    /// Planner/executor loop.
    ///
    /// # Panics
    ///
    /// Panics if the trajectory made more backend calls than
    /// [`AgentConfig::max_rp_react_completions`], which would be a runtime bug.
    pub fn run_rp_react(&self, question: &Question, env: &mut ToolEnvironment) -> Result<Trajectory, OrchestratorError> {
        let (_, pea) = self.registry.route(&question.domain)?;
        let mut run = Run::new(self, question);
        let result = run.rp_react(question, pea, env);
        let traj = run.finish(result);
        let bound = self.config.max_rp_react_completions();
        assert!(
            traj.completions <= bound,
            "trajectory made {} completions, bound is {bound}",
            traj.completions
        );
        Ok(traj)
    }

    /// One executor invocation, outside any planner trajectory. Mostly useful
    /// for tests and debugging; the planner loop uses the same code path.
    pub fn run_pea(&self, question: &Question, subquery: &str, prev_actions: &str, env: &mut ToolEnvironment) -> (ExecutionResult, Trajectory) {
        let examples = self.registry.route(&question.domain).ok().and_then(|(_, s)| s.examples.clone());
        let spec = PeaSpec { domains: Vec::new(), examples };
        let mut run = Run::new(self, question);
        let outcome = run.pea(subquery, prev_actions, &spec, env).map(|(r, _)| r);
        let result = match &outcome {
            Ok(r) => r.clone(),
            Err(_) => ExecutionResult { content: String::new(), succeeded: false, steps_used: run.traj.pea_steps },
        };
        let end = outcome.map(|r| {
            let term = if r.succeeded { Termination::Finished } else { Termination::StepLimit };
            (Some(r.content), term)
        });
        (result, run.finish(end))
    }

    /// Single-agent baseline.
    pub fn run_react(&self, question: &Question, env: &mut ToolEnvironment) -> Trajectory {
        let mut run = Run::new(self, question);
        let examples = self.prompts.react_examples_for(&question.domain);
        let template = self.prompts.react.clone();
        let render = |sp: &str| {
            render_template(
                &template,
                &[("examples", &examples), ("question", &question.question), ("scratchpad", sp)],
            )
        };
        let result = run
            .react_loop(AgentRole::React, self.config.react_step_limit, &render, env)
            .map(|o| finish_of(o.answer));
        run.finish(result)
    }

    /// ReAct with an evaluator and up to `max_reflections` reflective retries.
    pub fn run_reflexion(&self, question: &Question, env: &mut ToolEnvironment) -> Trajectory {
        let mut run = Run::new(self, question);
        let result = run.reflexion(question, env);
        run.finish(result)
    }
}

fn finish_of(answer: Option<String>) -> (Option<String>, Termination) {
    match answer {
        Some(a) => (Some(a), Termination::Finished),
        None => (None, Termination::StepLimit),
    }
}

/// A completion together with where it came from.
struct Sampled<T> {
    text: String,
    turn: usize,
    prompt_tokens: u64,
    parsed: Result<T, ProtocolError>,
}

struct LoopOutcome {
    answer: Option<String>,
    scratchpad: String,
    actions: Vec<ActionKind>,
    last_observation: Option<String>,
    /// Truncated observations produced during this loop.
    stored: Vec<Observation>,
    steps: usize,
}

/// Mutable state of one trajectory.
struct Run<'a> {
    orch: &'a Orchestrator,
    traj: Trajectory,
    turns: HashMap<AgentRole, usize>,
    subquery: Option<usize>,
    trial: Option<usize>,
}

impl<'a> Run<'a> {
    fn new(orch: &'a Orchestrator, question: &Question) -> Self {
        Run {
            orch,
            traj: Trajectory::new(&question.qid, &orch.config.label()),
            turns: HashMap::new(),
            subquery: None,
            trial: None,
        }
    }

    fn config(&self) -> &AgentConfig {
        &self.orch.config
    }

    fn finish(mut self, result: Result<(Option<String>, Termination), BackendError>) -> Trajectory {
        let (answer, termination) = match result {
            Ok(end) => end,
            Err(e) => {
                self.traj.error = Some(e.to_string());
                (None, Termination::BackendError)
            }
        };
        self.traj.final_answer = answer;
        self.traj.termination = termination;
        if let Some(last) = self.traj.steps.last_mut() {
            last.termination = Some(termination);
        }
        self.traj
    }

    fn call(&mut self, role: AgentRole, prompt: String, stops: &[&str]) -> Result<(String, usize, u64), BackendError> {
        let counter = self.turns.entry(role).or_insert(0);
        let turn = *counter;
        *counter += 1;
        let cfg = self.config();
        let mut req = CompletionRequest::new(self.traj.qid.clone(), role, turn, prompt).with_stops(stops);
        req.temperature = cfg.temperature;
        req.top_p = cfg.top_p;
        req.max_completion_tokens = cfg.max_completion_tokens;
        req.seed = cfg.seed;
        self.traj.completions += 1;
        let completion = self.orch.backend.complete(&req)?;
        let prompt_tokens = completion
            .prompt_tokens
            .unwrap_or_else(|| tokenize_for_threshold(&req.prompt_text()).len() as u64);
        Ok((completion.text, turn, prompt_tokens))
    }

    /// Samples once, and once more if the output does not parse.
    fn sample<T>(
        &mut self,
        role: AgentRole,
        prompt: &str,
        stops: &[&str],
        parse: impl Fn(&str) -> Result<T, ProtocolError>,
    ) -> Result<Sampled<T>, BackendError> {
        let fix = |text: String| if role == AgentRole::Rpa { close_dangling_directive(&text) } else { text };
        let (text, turn, prompt_tokens) = self.call(role, prompt.to_string(), stops)?;
        let text = fix(text);
        match parse(&text) {
            Ok(parsed) => Ok(Sampled { text, turn, prompt_tokens, parsed: Ok(parsed) }),
            Err(e) => {
                self.record(role, turn, prompt_tokens, &text, None, Some(format!("Error: {e}; re-sampling")), None, true);
                let (text, turn, prompt_tokens) = self.call(role, prompt.to_string(), stops)?;
                let text = fix(text);
                let parsed = parse(&text);
                Ok(Sampled { text, turn, prompt_tokens, parsed })
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        role: AgentRole,
        turn_index: usize,
        prompt_tokens: u64,
        completion_text: &str,
        action: Option<String>,
        observation: Option<String>,
        variable: Option<String>,
        malformed: bool,
    ) {
        let subquery_index = if role == AgentRole::Pea { self.subquery } else { None };
        self.traj.steps.push(StepRecord {
            qid: self.traj.qid.clone(),
            approach: self.traj.approach.clone(),
            role,
            turn_index,
            prompt_tokens,
            completion_text: completion_text.to_string(),
            action,
            observation,
            termination: None,
            subquery_index,
            trial: self.trial,
            variable,
            malformed,
            timestamp_ms: trajectory::now_ms(),
        });
    }

    /// Thought/Action/Observation loop shared by the executor and the baselines.
    fn react_loop(
        &mut self,
        role: AgentRole,
        limit: usize,
        render: &dyn Fn(&str) -> String,
        env: &mut ToolEnvironment,
    ) -> Result<LoopOutcome, BackendError> {
        let threshold = self.config().context_threshold;
        let mut out = LoopOutcome {
            answer: None,
            scratchpad: String::new(),
            actions: Vec::new(),
            last_observation: None,
            stored: Vec::new(),
            steps: 0,
        };
        for step in 1..=limit {
            out.steps = step;
            if role == AgentRole::Pea {
                self.traj.pea_steps += 1;
            }
            let prompt = render(&out.scratchpad);
            let s = self.sample(role, &prompt, &PEA_STOP_SEQUENCES, parse_pea_output)?;
            let text = s.text.trim();
            let turn = match s.parsed {
                Ok(turn) => turn,
                Err(e) => {
                    let obs = format!("Error: {e}. Reply with one Thought and one Action such as Calculate[1+1].");
                    out.scratchpad.push_str(&format!("\n{text}\nObservation {step}: {obs}"));
                    self.record(role, s.turn, s.prompt_tokens, text, None, Some(obs.clone()), None, false);
                    out.last_observation = Some(obs);
                    continue;
                }
            };
            out.actions.push(turn.action.kind);
            match env.dispatch(&turn.action) {
                ToolOutcome::Finish(answer) => {
                    out.scratchpad.push('\n');
                    out.scratchpad.push_str(text);
                    self.record(role, s.turn, s.prompt_tokens, text, Some(turn.action.to_string()), None, None, false);
                    out.answer = Some(answer);
                    return Ok(out);
                }
                ToolOutcome::Text(raw) => {
                    let obs = ingest_tool_output(&raw, threshold, &mut env.variables);
                    let rendered = obs.render();
                    out.scratchpad.push_str(&format!("\n{text}\nObservation {step}: {rendered}"));
                    self.record(
                        role,
                        s.turn,
                        s.prompt_tokens,
                        text,
                        Some(turn.action.to_string()),
                        Some(rendered.clone()),
                        obs.variable.clone(),
                        false,
                    );
                    out.last_observation = Some(rendered);
                    if obs.truncated {
                        out.stored.push(obs);
                    }
                }
            }
        }
        Ok(out)
    }

    fn pea(
        &mut self,
        subquery: &str,
        prev_actions: &str,
        spec: &PeaSpec,
        env: &mut ToolEnvironment,
    ) -> Result<(ExecutionResult, LoopOutcome), BackendError> {
        let prompts = Arc::clone(&self.orch.prompts);
        let examples = spec.examples.as_deref().unwrap_or(&prompts.pea_examples);
        let prev = if prev_actions.is_empty() { "(none)" } else { prev_actions };
        let render = |sp: &str| {
            render_template(
                &prompts.pea,
                &[
                    ("examples", examples),
                    ("prev_actions", prev),
                    ("question", subquery),
                    ("scratchpad", sp.strip_prefix('\n').unwrap_or(sp)),
                ],
            )
        };
        let limit = self.config().pea_step_limit;
        let outcome = self.react_loop(AgentRole::Pea, limit, &render, env)?;
        let result = match &outcome.answer {
            Some(answer) => {
                let content = match outcome
                    .stored
                    .iter()
                    .find(|o| o.variable.as_deref().is_some_and(|v| mentions(answer, v)))
                {
                    Some(obs) => compose_executor_notice(obs, subquery),
                    None => answer.clone(),
                };
                ExecutionResult { content, succeeded: true, steps_used: outcome.steps }
            }
            None => ExecutionResult { content: String::new(), succeeded: false, steps_used: outcome.steps },
        };
        Ok((result, outcome))
    }

    fn rp_react(
        &mut self,
        question: &Question,
        pea: &PeaSpec,
        env: &mut ToolEnvironment,
    ) -> Result<(Option<String>, Termination), BackendError> {
        let prompts = Arc::clone(&self.orch.prompts);
        let limit = self.config().rpa_search_limit;
        let threshold = self.config().context_threshold;
        let limit_text = limit.to_string();
        let mut scratchpad = String::new();
        let mut digest: Vec<String> = Vec::new();
        loop {
            let prompt = render_template(
                &prompts.rpa,
                &[
                    ("examples", &prompts.rpa_examples),
                    ("MAX_SEARCH_LIMIT", &limit_text),
                    ("question", &question.question),
                    ("scratchpad", &scratchpad),
                ],
            );
            let s = self.sample(AgentRole::Rpa, &prompt, &RPA_STOP_SEQUENCES, parse_rpa_output)?;
            let turn = match s.parsed {
                Ok(turn) => turn,
                Err(e) => {
                    // An unusable planner turn still spends one search.
                    if self.traj.rpa_queries == limit {
                        self.record(AgentRole::Rpa, s.turn, s.prompt_tokens, &s.text, None, None, None, false);
                        return Ok((None, Termination::SearchLimit));
                    }
                    self.traj.rpa_queries += 1;
                    let note = format!("Error: {e}");
                    scratchpad.push_str(&s.text);
                    scratchpad.push('\n');
                    self.record(AgentRole::Rpa, s.turn, s.prompt_tokens, &s.text, None, Some(note), None, false);
                    continue;
                }
            };
            let (directive, text) = turn.effective();
            match directive {
                Directive::Finish => {
                    let answer = text.to_string();
                    self.record(
                        AgentRole::Rpa,
                        s.turn,
                        s.prompt_tokens,
                        &s.text,
                        Some(format!("Finish[{answer}]")),
                        None,
                        None,
                        false,
                    );
                    return Ok((Some(answer), Termination::Finished));
                }
                Directive::Query if self.traj.rpa_queries == limit => {
                    self.record(AgentRole::Rpa, s.turn, s.prompt_tokens, &s.text, Some(format!("Search[{text}]")), None, None, false);
                    return Ok((None, Termination::SearchLimit));
                }
                Directive::Query => {
                    let subquery = text.to_string();
                    let index = self.traj.rpa_queries;
                    self.traj.rpa_queries += 1;
                    // Log the planner turn before the executor's steps.
                    self.record(AgentRole::Rpa, s.turn, s.prompt_tokens, &s.text, Some(format!("Search[{subquery}]")), None, None, false);
                    let planner_record = self.traj.steps.len() - 1;
                    self.subquery = Some(index);
                    let prev = digest.join("\n");
                    let (result, outcome) = self.pea(&subquery, &prev, pea, env)?;
                    self.subquery = None;
                    let block = render_search_result(&result.content);
                    self.traj.steps[planner_record].observation = Some(block.clone());
                    scratchpad.push_str(&s.text);
                    scratchpad.push('\n');
                    scratchpad.push_str(&block);
                    scratchpad.push('\n');
                    digest.push(digest_line(index + 1, &subquery, &result, &outcome, threshold));
                }
            }
        }
    }

    fn reflexion(&mut self, question: &Question, env: &mut ToolEnvironment) -> Result<(Option<String>, Termination), BackendError> {
        let prompts = Arc::clone(&self.orch.prompts);
        let examples = prompts.react_examples_for(&question.domain);
        let max_reflections = self.config().max_reflections;
        let step_limit = self.config().react_step_limit;
        let mut last = (None, Termination::StepLimit);
        for trial in 0..=max_reflections {
            self.trial = Some(trial);
            self.traj.trials = trial + 1;
            if trial > 0 {
                env.reset();
            }
            let block = reflections_block(&self.traj.reflections);
            let render = |sp: &str| {
                render_template(
                    &prompts.reflexion_actor,
                    &[
                        ("examples", &examples),
                        ("prev_reflections", &block),
                        ("question", &question.question),
                        ("scratchpad", sp),
                    ],
                )
            };
            let outcome = self.react_loop(AgentRole::React, step_limit, &render, env)?;
            let trajectory_text = outcome.scratchpad.trim().to_string();
            last = finish_of(outcome.answer);

            let eval_prompt = render_template(
                &prompts.reflexion_evaluator,
                &[("question", &question.question), ("trajectory", &trajectory_text)],
            );
            let (text, turn, ptoks) = self.call(AgentRole::Evaluator, eval_prompt, &[])?;
            let verdict = parse_verdict(&text).unwrap_or(Verdict::Failure);
            let label = match verdict {
                Verdict::Success => "[SUCCESS]",
                Verdict::Failure => "[FAILURE]",
            };
            self.record(AgentRole::Evaluator, turn, ptoks, &text, None, Some(label.into()), None, false);
            if verdict == Verdict::Success || trial == max_reflections {
                break;
            }

            let prev = if self.traj.reflections.is_empty() {
                "(none)".to_string()
            } else {
                self.traj.reflections.join("\n")
            };
            let reflect_prompt = render_template(
                &prompts.reflexion_self_refine,
                &[("question", &question.question), ("trajectory", &trajectory_text), ("prev_reflections", &prev)],
            );
            let (text, turn, ptoks) = self.call(AgentRole::Reflector, reflect_prompt, &[])?;
            let reflection = strip_think(&text);
            self.record(AgentRole::Reflector, turn, ptoks, &text, None, None, None, false);
            self.traj.reflections.push(reflection);
        }
        Ok(last)
    }
}

/// Whether `text` names the variable `var` as a whole word.
fn mentions(text: &str, var: &str) -> bool {
    text.match_indices(var).any(|(at, _)| {
        let before = text[..at].chars().next_back();
        let after = text[at + var.len()..].chars().next();
        !before.is_some_and(|c| c.is_alphanumeric() || c == '_') && !after.is_some_and(|c| c.is_alphanumeric() || c == '_')
    })
}

/// First `limit` whitespace tokens of `text`, with a marker if anything was cut.
fn clip_tokens(text: &str, limit: usize) -> String {
    let tokens = tokenize_for_threshold(text);
    if tokens.len() <= limit {
        tokens.join(" ")
    } else {
        format!("{} ...", tokens[..limit].join(" "))
    }
}

/// One line of the executor's history: what was asked, which tools ran and
/// what came back, clipped to the context threshold.
fn digest_line(n: usize, subquery: &str, result: &ExecutionResult, outcome: &LoopOutcome, threshold: usize) -> String {
    let actions = if outcome.actions.is_empty() {
        "none".to_string()
    } else {
        outcome.actions.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    };
    let last = if result.succeeded {
        result.content.clone()
    } else {
        outcome.last_observation.clone().unwrap_or_else(|| "no result".into())
    };
    format!("{n}. {subquery} | actions: {actions} | result: {}", clip_tokens(&last, threshold))
}

fn reflections_block(reflections: &[String]) -> String {
    if reflections.is_empty() {
        return String::new();
    }
    let mut out = String::from(
        "Earlier attempts at this question failed. Reflections on those attempts, with a plan to do better:\n",
    );
    for r in reflections {
        out.push_str("- ");
        out.push_str(r);
        out.push('\n');
    }
    out
}

/// Removes `<think>…</think>` spans (and an unterminated trailing one).
fn strip_think(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while let Some(open) = rest.find("<think>") {
        out.push_str(&rest[..open]);
        match rest[open..].find("</think>") {
            Some(close) => rest = &rest[open + close + "</think>".len()..],
            None => {
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);
    out.replace("</think>", "").trim().to_string()
}
