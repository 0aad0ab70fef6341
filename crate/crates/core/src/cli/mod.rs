//! The `rpreact` command line: `run`, `report` and `replay`.

mod config;

use std::fs::OpenOptions;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use clap::{Args, Parser, Subcommand};

pub use config::{Difficulty, RunConfig, ALL_DOMAINS};

use crate::eval::{self, AccuracyCell, RunRecord};
use crate::llm::{BackendError, CompletionBackend, HttpBackend, HttpConfig, ScriptedBackend, ScriptedTranscript};
use crate::orchestrator::{Approach, Orchestrator, OrchestratorError, PromptSet, Question, Termination, Trajectory};
use crate::toolkit::code::ProcessWorkerPool;
use crate::toolkit::{CodeRunner, DataCatalog, DisabledRunner, ToolEnvironment};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("backend error: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "rpreact", version, about = "Planner/executor agents and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an approach over a question set and log trajectories and records.
    Run(RunArgs),
    /// Build accuracy and aggregate tables from run records or accuracy CSVs.
    Report(ReportArgs),
    /// Re-run one question against a strict scripted transcript.
    Replay(ReplayArgs),
}

/// Agent flags shared by `run` and `replay`. Unset flags leave the config
/// file (or default) value alone.
#[derive(Debug, Clone, Default, Args)]
pub struct AgentArgs {
    #[arg(long)]
    pub approach: Option<Approach>,
    #[arg(long)]
    pub rpa_search_limit: Option<usize>,
    #[arg(long)]
    pub pea_step_limit: Option<usize>,
    #[arg(long)]
    pub react_step_limit: Option<usize>,
    #[arg(long)]
    pub max_reflections: Option<usize>,
    /// Context threshold T, in whitespace tokens.
    #[arg(long = "threshold-t")]
    pub threshold_t: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory overriding `prompts/*.txt` and `examples/*.txt`.
    #[arg(long)]
    pub prompts_dir: Option<PathBuf>,
    /// Data directory with tables, corpora and graphs.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Code-interpreter worker command, e.g. `python3 -m codeexec_worker`.
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    pub worker: Option<Vec<String>>,
}

impl AgentArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let a = &mut cfg.agent;
        if let Some(v) = self.approach {
            a.approach = v;
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {$(if let Some(v) = self.$field { a.$target = v; })*};
        }
        set!(rpa_search_limit => rpa_search_limit, pea_step_limit => pea_step_limit,
             react_step_limit => react_step_limit, max_reflections => max_reflections,
             threshold_t => context_threshold, temperature => temperature, top_p => top_p);
        if self.seed.is_some() {
            a.seed = self.seed;
        }
        if self.prompts_dir.is_some() {
            cfg.prompts_dir = self.prompts_dir.clone();
        }
        if self.data_dir.is_some() {
            cfg.data_dir = self.data_dir.clone();
        }
        if self.worker.is_some() {
            cfg.worker = self.worker.clone();
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file mirroring the run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset: JSON lines of `{qid, question, answer, domain, difficulty}`.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Base URL of an OpenAI-compatible endpoint.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Comma-separated subset of flights,coffee,airbnb,yelp,scirex,agenda.
    #[arg(long, value_delimiter = ',')]
    pub domains: Option<Vec<String>>,
    #[arg(long)]
    pub difficulty: Option<Difficulty>,
    /// Maximum questions per domain and difficulty.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Scripted transcript to use instead of an HTTP endpoint.
    #[arg(long)]
    pub scripted: Option<PathBuf>,
    #[command(flatten)]
    pub agent: AgentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Record files (`*.jsonl`), accuracy CSVs (`*.csv`) or directories.
    pub paths: Vec<PathBuf>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Only aggregate over these models (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub scripted: PathBuf,
    #[arg(long)]
    pub question: String,
    #[arg(long, default_value = "replay")]
    pub qid: String,
    #[arg(long, default_value = "")]
    pub domain: String,
    #[command(flatten)]
    pub agent: AgentArgs,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(args) => RunConfig::resolve(&args).and_then(|cfg| cmd_run(&cfg)).map(|_| ()),
        Command::Report(args) => cmd_report(&args.paths, &args.out, args.models.as_deref()).map(|_| ()),
        Command::Replay(args) => cmd_replay(&args).map(|t| print!("{}", t.to_jsonl())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) | CliError::Orchestrator(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Reads a dataset file. Every line must parse.
pub fn load_questions(path: &Path) -> Result<Vec<Question>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: Question = serde_json::from_str(&line)
            .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(q);
    }
    Ok(out)
}

fn build_env_parts(cfg_data: Option<&Path>, worker: Option<&[String]>) -> (Arc<DataCatalog>, Arc<dyn CodeRunner>) {
    let catalog = Arc::new(match cfg_data {
        Some(dir) => DataCatalog::from_dir(dir),
        None => DataCatalog::in_memory(),
    });
    let runner: Arc<dyn CodeRunner> = match worker {
        Some(cmd) if !cmd.is_empty() => Arc::new(ProcessWorkerPool::new(cmd.to_vec())),
        _ => Arc::new(DisabledRunner),
    };
    (catalog, runner)
}

fn load_prompts(dir: Option<&Path>) -> Result<PromptSet, CliError> {
    match dir {
        Some(d) => PromptSet::from_dir(d).map_err(|e| CliError::Config(format!("{}: {e}", d.display()))),
        None => Ok(PromptSet::default()),
    }
}

/// Counts from one `run`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub trajectories: usize,
    pub correct: usize,
    pub backend_failures: usize,
}

/// Runs every selected question and appends to `out/trajectories.jsonl`
/// and `out/records.jsonl`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let questions = cfg.select(load_questions(&cfg.questions)?);
    let backend: Arc<dyn CompletionBackend> = match &cfg.scripted {
        Some(path) => Arc::new(ScriptedBackend::new(ScriptedTranscript::load(path)?)),
        None => Arc::new(HttpBackend::new(HttpConfig {
            base_url: cfg.endpoint.clone(),
            model: cfg.model.clone(),
            api_key_env: cfg.api_key_env.clone(),
            ..Default::default()
        })?),
    };
    let orch = Orchestrator::new(cfg.agent.clone(), backend)?.with_prompts(load_prompts(cfg.prompts_dir.as_deref())?);
    let (catalog, runner) = build_env_parts(cfg.data_dir.as_deref(), cfg.worker.as_deref());
    let model = cfg.model_label();

    std::fs::create_dir_all(&cfg.out)?;
    let open = |name: &str| OpenOptions::new().create(true).append(true).open(cfg.out.join(name));
    let mut traj_log = open("trajectories.jsonl")?;
    let mut record_log = open("records.jsonl")?;

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<Trajectory, OrchestratorError>)>();
    let mut summary = RunSummary { trajectories: 0, correct: 0, backend_failures: 0 };
    let mut per_domain: Vec<(String, String, usize, usize)> = Vec::new();
    let mut fatal = None;

    std::thread::scope(|scope| {
        for _ in 0..cfg.concurrency.min(questions.len().max(1)) {
            let tx = tx.clone();
            let (orch, questions, next, catalog, runner) = (&orch, &questions, &next, &catalog, &runner);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(q) = questions.get(i) else { break };
                let mut env = ToolEnvironment::new(Arc::clone(catalog), Arc::clone(runner));
                if tx.send((i, orch.run(q, &mut env))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Single writer: results are appended in arrival order.
        for (i, result) in rx {
            let q = &questions[i];
            let traj = match result {
                Ok(t) => t,
                Err(e) => {
                    fatal.get_or_insert(CliError::from(e));
                    continue;
                }
            };
            let record = RunRecord::from_trajectory(q, &model, &traj);
            let written = traj_log
                .write_all(traj.to_jsonl().as_bytes())
                .and_then(|_| writeln!(record_log, "{}", serde_json::to_string(&record).expect("records serialize")));
            if let Err(e) = written {
                fatal.get_or_insert(CliError::Io(e));
            }
            summary.trajectories += 1;
            summary.correct += usize::from(record.correct);
            if traj.termination == Termination::BackendError {
                summary.backend_failures += 1;
                eprintln!("{}: {}", q.qid, traj.error.as_deref().unwrap_or("backend error"));
            }
            match per_domain.iter_mut().find(|(d, diff, _, _)| *d == q.domain && *diff == q.difficulty) {
                Some(entry) => {
                    entry.2 += usize::from(record.correct);
                    entry.3 += 1;
                }
                None => per_domain.push((q.domain.clone(), q.difficulty.clone(), usize::from(record.correct), 1)),
            }
        }
    });
    if let Some(e) = fatal {
        return Err(e);
    }
    for (domain, difficulty, ok, n) in &per_domain {
        println!("{domain} [{difficulty}] {}: {ok}/{n} correct ({})", orch.config.label(), eval::fmt2(*ok as f64 / *n as f64));
    }
    if summary.trajectories > 0 && summary.backend_failures == summary.trajectories {
        return Err(CliError::Config(format!(
            "every trajectory failed at the backend ({} of {}); is the endpoint reachable?",
            summary.backend_failures, summary.trajectories
        )));
    }
    Ok(summary)
}

/// Inputs found under a report path.
fn collect_report_inputs(path: &Path, records: &mut Vec<PathBuf>, csvs: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for p in entries {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if p.is_file() && name.ends_with(".jsonl") && name.contains("records") {
                records.push(p);
            } else if p.is_file() && name.ends_with(".csv") && name.contains("cells") {
                csvs.push(p);
            }
        }
        return Ok(());
    }
    if !path.exists() {
        return Err(CliError::Config(format!("{}: no such file or directory", path.display())));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => csvs.push(path.to_path_buf()),
        _ => records.push(path.to_path_buf()),
    }
    Ok(())
}

/// Rebuilds accuracy cells from records and CSV fixtures and writes the
/// report files. Corrupt lines are skipped with a warning on stderr.
pub fn cmd_report(paths: &[PathBuf], out: &Path, models: Option<&[String]>) -> Result<eval::Report, CliError> {
    let (mut record_files, mut csv_files) = (Vec::new(), Vec::new());
    for p in paths {
        collect_report_inputs(p, &mut record_files, &mut csv_files)?;
    }
    let mut records = Vec::new();
    let mut cells: Vec<AccuracyCell> = Vec::new();
    for p in &record_files {
        let loaded = eval::load_records(p)?;
        if loaded.skipped > 0 {
            eprintln!("warning: skipped {} corrupt line(s) in {}", loaded.skipped, p.display());
        }
        records.extend(loaded.items);
    }
    for p in &csv_files {
        let loaded = eval::load_cells_csv(p)?;
        if loaded.skipped > 0 {
            eprintln!("warning: skipped {} corrupt row(s) in {}", loaded.skipped, p.display());
        }
        cells.extend(loaded.items);
    }
    cells.extend(eval::cells_from_records(&records));
    let report = eval::build_report(&cells, out, models)?;
    print!("{}", report.text);
    Ok(report)
}

/// Strict re-execution of one question. An uncovered completion is an error
/// naming the role and turn.
pub fn cmd_replay(args: &ReplayArgs) -> Result<Trajectory, CliError> {
    let mut cfg = RunConfig::default();
    args.agent.apply(&mut cfg);
    cfg.agent.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mut transcript = ScriptedTranscript::load(&args.scripted)?;
    transcript.strict = true;
    let backend = Arc::new(ScriptedBackend::new(transcript));
    let orch = Orchestrator::new(cfg.agent.clone(), backend)?.with_prompts(load_prompts(cfg.prompts_dir.as_deref())?);
    let (catalog, runner) = build_env_parts(cfg.data_dir.as_deref(), cfg.worker.as_deref());
    let mut env = ToolEnvironment::new(catalog, runner);
    let q = Question::new(&args.qid, &args.question, &args.domain);
    let traj = orch.run(&q, &mut env)?;
    if traj.termination == Termination::BackendError {
        return Err(CliError::Config(format!(
            "transcript does not cover the trajectory: {}",
            traj.error.as_deref().unwrap_or("backend error")
        )));
    }
    Ok(traj)
}
