//! Scoring and reporting: answer normalisation, per-run records, accuracy
//! cells and the cross-model aggregate metrics.

mod metrics;
mod normalize;
mod report;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use metrics::{accuracy, cps, max, mean, saturation, std, MetricsRow};
pub use normalize::{is_correct, normalize_answer, parse_numeric, NUMERIC_RTOL};
pub use report::{aggregate, build_report, fmt2, Report};

use crate::orchestrator::{Question, Termination, Trajectory};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("accuracy {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PartialEq for EvalError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (EvalError::EmptyInput, EvalError::EmptyInput) => true,
            (EvalError::OutOfRange(a), EvalError::OutOfRange(b)) => a == b,
            _ => false,
        }
    }
}

/// Outcome of one question under one approach and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub qid: String,
    pub approach: String,
    pub model: String,
    pub domain: String,
    pub difficulty: String,
    pub predicted: String,
    pub gold: String,
    pub correct: bool,
    pub steps_used: usize,
    pub termination: Termination,
}

impl RunRecord {
    pub fn from_trajectory(question: &Question, model: &str, traj: &Trajectory) -> RunRecord {
        let predicted = traj.final_answer.clone().unwrap_or_default();
        RunRecord {
            qid: question.qid.clone(),
            approach: traj.approach.clone(),
            model: model.to_string(),
            domain: question.domain.clone(),
            difficulty: question.difficulty.clone(),
            correct: is_correct(&predicted, &question.answer),
            predicted,
            gold: question.answer.clone(),
            steps_used: traj.steps_used(),
            termination: traj.termination,
        }
    }
}

/// Accuracy of one approach × model × domain × difficulty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub difficulty: String,
    pub approach: String,
    pub model: String,
    pub domain: String,
    pub accuracy: f64,
}

/// Accuracy cells from run records. When a question was run more than once
/// under the same approach and model, the last record counts.
pub fn cells_from_records(records: &[RunRecord]) -> Vec<AccuracyCell> {
    let mut latest: BTreeMap<(&str, &str, &str, &str, &str), &RunRecord> = BTreeMap::new();
    for r in records {
        latest.insert((&r.difficulty, &r.approach, &r.model, &r.domain, &r.qid), r);
    }
    let mut tally: BTreeMap<(&str, &str, &str, &str), (usize, usize)> = BTreeMap::new();
    for ((d, a, m, dom, _), r) in latest {
        let t = tally.entry((d, a, m, dom)).or_default();
        t.0 += usize::from(r.correct);
        t.1 += 1;
    }
    tally
        .into_iter()
        .map(|((d, a, m, dom), (ok, n))| AccuracyCell {
            difficulty: d.into(),
            approach: a.into(),
            model: m.into(),
            domain: dom.into(),
            accuracy: ok as f64 / n as f64,
        })
        .collect()
}

/// Parsed lines plus the number of lines that were skipped as corrupt.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub items: Vec<T>,
    pub skipped: usize,
}

/// Reads run records from JSON lines, skipping blank and unparsable lines.
pub fn load_records(path: &Path) -> Result<Loaded<RunRecord>, EvalError> {
    let file = std::fs::File::open(path)?;
    let mut out = Loaded { items: Vec::new(), skipped: 0 };
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.items.push(r),
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}

/// Reads accuracy cells from a CSV with header
/// `difficulty,approach,model,domain,accuracy`, skipping bad rows.
pub fn load_cells_csv(path: &Path) -> Result<Loaded<AccuracyCell>, EvalError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Loaded { items: Vec::new(), skipped: 0 };
    for row in reader.deserialize::<AccuracyCell>() {
        match row {
            Ok(c) if (0.0..=1.0).contains(&c.accuracy) => out.items.push(c),
            _ => out.skipped += 1,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(qid: &str, model: &str, correct: bool) -> RunRecord {
        RunRecord {
            qid: qid.into(),
            approach: "React".into(),
            model: model.into(),
            domain: "coffee".into(),
            difficulty: "easy".into(),
            predicted: String::new(),
            gold: String::new(),
            correct,
            steps_used: 1,
            termination: Termination::Finished,
        }
    }

    #[test]
    fn cells_keep_last_record_per_question() {
        let records = vec![rec("q1", "m", false), rec("q2", "m", true), rec("q1", "m", true), rec("q1", "n", false)];
        let cells = cells_from_records(&records);
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].model, "m");
        assert_eq!(cells[0].accuracy, 1.0);
        assert_eq!(cells[1].accuracy, 0.0);
    }
}
