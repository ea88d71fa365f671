use serde::Serialize;
use serde_json::Value;

use super::{Estimate, FailureRecord, RunResult};
use crate::tabular::Dataset;

pub type ErrorReport = FailureRecord;

/// Canonical JSON form of a [`RunResult`]. Predictors are rendered as their
/// predictions on the dataset the run used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub estimate: Value,
    pub per_repetition: Vec<Value>,
    pub n_success: usize,
    pub n_fail: usize,
    pub fit_calls: usize,
    pub cache_hits: usize,
    pub errors: Vec<ErrorReport>,
}

fn render(e: &Estimate, data: &Dataset) -> Value {
    match e {
        Estimate::Scalar(v) => serde_json::json!(v),
        Estimate::Predictor(p) => match p.predict(data) {
            Ok(v) => serde_json::json!(v),
            Err(_) => Value::Null,
        },
    }
}

impl RunResult {
    pub fn report(&self, data: &Dataset) -> RunReport {
        RunReport {
            estimate: self.estimate.as_ref().map_or(Value::Null, |e| render(e, data)),
            per_repetition: self.per_repetition.iter().map(|e| render(e, data)).collect(),
            n_success: self.n_success,
            n_fail: self.n_fail,
            fit_calls: self.fit_calls,
            cache_hits: self.cache_hits,
            errors: self.errors.clone(),
        }
    }
}
