//! Host side of the code interpreter against a small Python worker that
//! speaks the same JSON-lines protocol as the real one.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rpreact::protocol::parse_action;
use rpreact::toolkit::code::{CodeExecError, CodeRunner, ExecStatus, ProcessWorkerPool};
use rpreact::toolkit::{ToolEnvironment, ToolOutcome};

fn worker_script() -> String {
    common::fixtures().join("mini_worker.py").display().to_string()
}

fn pool() -> ProcessWorkerPool {
    ProcessWorkerPool::new(vec!["python3".into(), worker_script()])
}

fn run(env: &mut ToolEnvironment, action: &str) -> String {
    match env.dispatch(&parse_action(action).unwrap()) {
        ToolOutcome::Text(t) => t,
        ToolOutcome::Finish(f) => panic!("finish {f}"),
    }
}

#[test]
fn variables_reach_the_worker_and_stay_unchanged() {
    let mut env = ToolEnvironment::new(common::catalog(), Arc::new(pool()));
    let text = common::generated_text(250, 3);
    let name = env.variables.insert(text.clone());
    assert_eq!(name, "value0");
    assert_eq!(run(&mut env, "PythonInterpreter(value0)[len(value0.split())]"), "250");
    // Rebinding inside the worker does not touch the host copy.
    assert_eq!(run(&mut env, "PythonInterpreter(value0)[value0 = 'x'\nprint(value0)]"), "x");
    assert_eq!(env.variables.get("value0"), Some(text.as_str()));
    assert_eq!(run(&mut env, "PythonInterpreter(value0)[len(value0.split())]"), "250");
    assert_eq!(run(&mut env, "PythonInterpreter[1+1]"), "2");
    assert_eq!(run(&mut env, "PythonInterpreter[print('a')\n'b']"), "a\nb");
    let err = run(&mut env, "PythonInterpreter[1/0]");
    assert!(err.starts_with("Error: ZeroDivisionError"), "{err}");
    assert_eq!(run(&mut env, "PythonInterpreter(value7)[value7]"), "Error: unknown variable value7");
}

#[test]
fn worker_side_timeout_respawns() {
    let pool = pool();
    let none = BTreeMap::new();
    assert_eq!(pool.execute("1+1", &none, Duration::from_secs(5)).unwrap().result, "2");
    assert_eq!(pool.spawned(), 1);

    let started = Instant::now();
    let err = pool.execute("while True:\n    pass", &none, Duration::from_secs(2)).unwrap_err();
    let took = started.elapsed();
    assert!(matches!(err, CodeExecError::WorkerTimeout(d) if d == Duration::from_secs(2)), "{err:?}");
    assert!(took >= Duration::from_secs(2) && took < Duration::from_secs(4), "{took:?}");

    // The timed-out worker was discarded; the next request gets a fresh one.
    let resp = pool.execute("40+2", &none, Duration::from_secs(5)).unwrap();
    assert_eq!(resp.status, ExecStatus::Ok);
    assert_eq!(resp.result, "42");
    assert_eq!(pool.spawned(), 2);
}

#[test]
fn host_kills_a_worker_that_ignores_its_deadline() {
    let pool = ProcessWorkerPool::new(vec![
        "env".into(),
        "MINI_WORKER_IGNORE_TIMEOUT=1".into(),
        "python3".into(),
        worker_script(),
    ]);
    let none = BTreeMap::new();
    let started = Instant::now();
    let err = pool.execute("while True:\n    pass", &none, Duration::from_secs(1)).unwrap_err();
    let took = started.elapsed();
    assert!(matches!(err, CodeExecError::WorkerTimeout(_)), "{err:?}");
    // Deadline plus the host's grace period, then a kill.
    assert!(took >= Duration::from_secs(3) && took < Duration::from_secs(6), "{took:?}");
    assert_eq!(pool.execute("7*6", &none, Duration::from_secs(5)).unwrap().result, "42");
    assert_eq!(pool.spawned(), 2);
}

#[test]
fn concurrent_requests_get_their_own_answers() {
    let pool = Arc::new(pool());
    let handles: Vec<_> = (0..10)
        .map(|i| {
            let pool = Arc::clone(&pool);
            thread::spawn(move || {
                let vars = BTreeMap::from([("n".to_string(), i.to_string())]);
                let resp = pool.execute("int(n) * int(n)", &vars, Duration::from_secs(10)).unwrap();
                (i, resp)
            })
        })
        .collect();
    let mut ids = Vec::new();
    for h in handles {
        let (i, resp) = h.join().unwrap();
        assert_eq!(resp.result, (i * i).to_string());
        ids.push(resp.id);
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 10);
    assert!(pool.spawned() <= 10);

    // Sequential reuse keeps ids increasing on one worker.
    let before = pool.spawned();
    let a = pool.execute("1", &BTreeMap::new(), Duration::from_secs(5)).unwrap();
    let b = pool.execute("2", &BTreeMap::new(), Duration::from_secs(5)).unwrap();
    assert!(a.id.parse::<u64>().unwrap() < b.id.parse::<u64>().unwrap());
    assert_eq!(pool.spawned(), before);
}

#[test]
fn output_is_capped() {
    let pool = pool().with_output_cap(100);
    let resp = pool.execute("print('x' * 1000)", &BTreeMap::new(), Duration::from_secs(5)).unwrap();
    assert!(resp.stdout.starts_with(&"x".repeat(100)));
    assert!(resp.stdout.ends_with("[output truncated at 100 bytes]"));
}

#[test]
fn garbage_from_worker_is_a_protocol_error() {
    let pool = ProcessWorkerPool::new(vec!["sh".into(), "-c".into(), "read line; echo not-json".into()]);
    let err = pool.execute("1", &BTreeMap::new(), Duration::from_secs(5)).unwrap_err();
    assert!(matches!(err, CodeExecError::Protocol(_)), "{err:?}");
}
