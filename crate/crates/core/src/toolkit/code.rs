//! Host side of the code-interpreter tool.
//!
//! Code runs in a separate worker process that speaks one JSON object per
//! line on stdin/stdout:
//!
//! ```text
//! -> {"id": "7", "code": "print(len(value0.split()))", "variables": {"value0": "…"}, "timeout_s": 10}
//! <- {"id": "7", "status": "ok", "stdout": "250\n", "result": ""}
//! ```
//!
//! Workers are pooled. A worker that times out, crashes or answers garbage is
//! killed and the next request gets a fresh process.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_OUTPUT_CAP: usize = 64 * 1024;
/// Extra time the host waits past the worker-side deadline before killing it.
const KILL_GRACE: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub id: String,
    pub code: String,
    #[serde(default)]
    pub variables: BTreeMap<String, String>,
    pub timeout_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecStatus {
    Ok,
    Error,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResponse {
    pub id: String,
    pub status: ExecStatus,
    #[serde(default)]
    pub stdout: String,
    #[serde(default)]
    pub result: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodeExecError {
    #[error("code execution timed out after {} s", .0.as_secs_f64())]
    WorkerTimeout(Duration),
    #[error("code worker unavailable: {0}")]
    Unavailable(String),
    #[error("code worker protocol error: {0}")]
    Protocol(String),
}

pub trait CodeRunner: Send + Sync {
    fn execute(
        &self,
        code: &str,
        variables: &BTreeMap<String, String>,
        timeout: Duration,
    ) -> Result<ExecResponse, CodeExecError>;
}

/// Used when no worker is configured; every request fails with a readable error.
#[derive(Debug, Default, Clone, Copy)]
pub struct DisabledRunner;

impl CodeRunner for DisabledRunner {
    fn execute(
        &self,
        _code: &str,
        _variables: &BTreeMap<String, String>,
        _timeout: Duration,
    ) -> Result<ExecResponse, CodeExecError> {
        Err(CodeExecError::Unavailable("no code worker is configured".into()))
    }
}

/// Closure-backed runner for tests and embedding.
pub struct FnRunner<F>(pub F);

impl<F> CodeRunner for FnRunner<F>
where
    F: Fn(&str, &BTreeMap<String, String>) -> Result<ExecResponse, CodeExecError> + Send + Sync,
{
    fn execute(
        &self,
        code: &str,
        variables: &BTreeMap<String, String>,
        _timeout: Duration,
    ) -> Result<ExecResponse, CodeExecError> {
        (self.0)(code, variables)
    }
}

fn cap_text(text: &mut String, cap: usize) {
    if text.len() <= cap {
        return;
    }
    let mut cut = cap;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.truncate(cut);
    text.push_str(&format!("\n[output truncated at {cap} bytes]"));
}

/// Text shown to the agent for one execution.
pub fn render_response(resp: &ExecResponse) -> String {
    match resp.status {
        ExecStatus::Ok => {
            let stdout = resp.stdout.trim_end();
            let result = resp.result.trim_end();
            match (stdout.is_empty(), result.is_empty()) {
                (true, true) => "(no output)".to_string(),
                (false, true) => stdout.to_string(),
                (true, false) => result.to_string(),
                (false, false) => format!("{stdout}\n{result}"),
            }
        }
        ExecStatus::Error | ExecStatus::Timeout => format!(
            "Error: {}",
            resp.error_text.as_deref().unwrap_or("code execution failed").trim_end()
        ),
    }
}

struct WorkerProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl WorkerProcess {
    fn spawn(command: &[String]) -> Result<WorkerProcess, CodeExecError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| CodeExecError::Unavailable("empty worker command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| CodeExecError::Unavailable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(WorkerProcess { child, stdin, lines })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn shutdown(mut self) {
        let _ = writeln!(self.stdin, "{}", serde_json::json!({"id": "shutdown", "code": "__shutdown__"}));
        let _ = self.stdin.flush();
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        self.kill();
    }

    fn roundtrip(&mut self, req: &ExecRequest, wait: Duration) -> Result<ExecResponse, CodeExecError> {
        let line = serde_json::to_string(req).map_err(|e| CodeExecError::Protocol(e.to_string()))?;
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| CodeExecError::Unavailable(e.to_string()))?;
        let deadline = Instant::now() + wait;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    let resp: ExecResponse = serde_json::from_str(&line)
                        .map_err(|e| CodeExecError::Protocol(format!("{e}: {line}")))?;
                    if resp.id == req.id {
                        return Ok(resp);
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(CodeExecError::WorkerTimeout(Duration::from_secs_f64(req.timeout_s)))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(CodeExecError::Unavailable("worker exited".into()))
                }
            }
        }
    }
}

/// Pool of worker processes launched from `command` (e.g. `python3 worker.py`).
pub struct ProcessWorkerPool {
    command: Vec<String>,
    idle: Mutex<Vec<WorkerProcess>>,
    next_id: AtomicU64,
    output_cap: usize,
    spawned: AtomicU64,
}

impl ProcessWorkerPool {
    pub fn new(command: Vec<String>) -> Self {
        ProcessWorkerPool {
            command,
            idle: Mutex::new(Vec::new()),
            next_id: AtomicU64::new(0),
            output_cap: DEFAULT_OUTPUT_CAP,
            spawned: AtomicU64::new(0),
        }
    }

    pub fn with_output_cap(mut self, cap: usize) -> Self {
        self.output_cap = cap;
        self
    }

    /// Number of worker processes started so far.
    pub fn spawned(&self) -> u64 {
        self.spawned.load(Ordering::Relaxed)
    }

    fn checkout(&self) -> Result<WorkerProcess, CodeExecError> {
        if let Some(w) = self.idle.lock().unwrap_or_else(|p| p.into_inner()).pop() {
            return Ok(w);
        }
        self.spawned.fetch_add(1, Ordering::Relaxed);
        WorkerProcess::spawn(&self.command)
    }

    fn checkin(&self, w: WorkerProcess) {
        self.idle.lock().unwrap_or_else(|p| p.into_inner()).push(w);
    }
}

impl Drop for ProcessWorkerPool {
    fn drop(&mut self) {
        let idle = std::mem::take(&mut *self.idle.lock().unwrap_or_else(|p| p.into_inner()));
        for w in idle {
            w.shutdown();
        }
    }
}

impl CodeRunner for ProcessWorkerPool {
    fn execute(
        &self,
        code: &str,
        variables: &BTreeMap<String, String>,
        timeout: Duration,
    ) -> Result<ExecResponse, CodeExecError> {
        let req = ExecRequest {
            id: self.next_id.fetch_add(1, Ordering::Relaxed).to_string(),
            code: code.to_string(),
            variables: variables.clone(),
            timeout_s: timeout.as_secs_f64(),
        };
        let mut worker = self.checkout()?;
        match worker.roundtrip(&req, timeout + KILL_GRACE) {
            Ok(mut resp) if resp.status != ExecStatus::Timeout => {
                self.checkin(worker);
                cap_text(&mut resp.stdout, self.output_cap);
                cap_text(&mut resp.result, self.output_cap);
                Ok(resp)
            }
            Ok(_) => {
                worker.kill();
                Err(CodeExecError::WorkerTimeout(timeout))
            }
            Err(e) => {
                worker.kill();
                Err(e)
            }
        }
    }
}
