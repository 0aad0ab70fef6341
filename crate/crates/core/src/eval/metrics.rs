use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, RunRecord};

fn check(xs: &[f64]) -> Result<(), EvalError> {
    if xs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    match xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(&x) => Err(EvalError::OutOfRange(x)),
        None => Ok(()),
    }
}

/// Fraction of records marked correct.
pub fn accuracy(records: &[RunRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64)
}

pub fn mean(xs: &[f64]) -> Result<f64, EvalError> {
    check(xs)?;
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn max(xs: &[f64]) -> Result<f64, EvalError> {
    check(xs)?;
    Ok(xs.iter().copied().fold(f64::MIN, f64::max))
}

/// Sample standard deviation (divisor n − 1); a single value has 0.
pub fn std(xs: &[f64]) -> Result<f64, EvalError> {
    let m = mean(xs)?;
    if xs.len() == 1 {
        return Ok(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Ok((ss / (xs.len() - 1) as f64).sqrt())
}

/// `1 − (max − mean)`: 1 when every model scores the same.
pub fn saturation(xs: &[f64]) -> Result<f64, EvalError> {
    Ok(1.0 - (max(xs)? - mean(xs)?))
}

/// Combined performance score: `saturation × max`.
///
/// ```
/// use rpreact::eval::cps;
/// let v = cps(&[0.23, 0.18, 0.44, 0.20]).unwrap();
/// assert!((v - 0.3619).abs() < 1e-4);
/// ```
pub fn cps(xs: &[f64]) -> Result<f64, EvalError> {
    Ok(saturation(xs)? * max(xs)?)
}

/// Aggregate statistics for one approach on one domain and difficulty,
/// across models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub approach: String,
    pub domain: String,
    pub difficulty: String,
    pub per_model_accuracy: BTreeMap<String, f64>,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub saturation: f64,
    pub cps: f64,
}

impl MetricsRow {
    pub fn new(
        difficulty: &str,
        approach: &str,
        domain: &str,
        per_model_accuracy: BTreeMap<String, f64>,
    ) -> Result<MetricsRow, EvalError> {
        let xs: Vec<f64> = per_model_accuracy.values().copied().collect();
        Ok(MetricsRow {
            approach: approach.to_string(),
            domain: domain.to_string(),
            difficulty: difficulty.to_string(),
            mean: mean(&xs)?,
            std: std(&xs)?,
            max: max(&xs)?,
            saturation: saturation(&xs)?,
            cps: cps(&xs)?,
            per_model_accuracy,
        })
    }
}
