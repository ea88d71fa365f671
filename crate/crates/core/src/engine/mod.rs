//! Runs methods over their fold schedules.
//!
//! Each repetition draws one fold assignment, then walks the `K` panels.
//! Within a panel, instances are fitted deps-first; a fit is skipped when an
//! identical instance (same node, window and upstream keys) was already
//! fitted in the same repetition. Any failure inside a repetition fails the
//! whole repetition and is logged; it never aborts the run.

mod key;
mod panel;
mod report;

pub use key::InstanceKey;
pub use report::{ErrorReport, RunReport};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::folds::{default_fold_split, schedule, AllocationError, FoldAssignment};
use crate::spec::{validate_method, MethodSpec, Mode, Predictor, ValidationReport};
use crate::tabular::Dataset;
use key::ModelCache;
use panel::{Failure, PanelRun, PanelValue, Plan};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("method {name:?} is invalid: {report}")]
    Invalid { name: String, report: ValidationReport },
    #[error("method {name:?} cannot be scheduled: {source}")]
    Schedule { name: String, source: AllocationError },
    #[error("data has {n} rows but method {name:?} needs at least K = {k}")]
    TooFewRows { name: String, n: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    /// Reuse fitted models within a repetition. Turning this off only costs
    /// time; results are identical for deterministic learners.
    pub cache: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 0, cache: true }
    }
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Scalar estimate or cross-fitted predictor.
#[derive(Debug, Clone)]
pub enum Estimate {
    Scalar(f64),
    Predictor(Predictor),
}

impl Estimate {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Estimate::Scalar(v) => Some(*v),
            Estimate::Predictor(_) => None,
        }
    }

    pub fn as_predictor(&self) -> Option<&Predictor> {
        match self {
            Estimate::Predictor(p) => Some(p),
            Estimate::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailureRecord {
    /// `None` for failures of the final aggregation over repetitions.
    pub rep: Option<usize>,
    pub panel: Option<usize>,
    /// `fold_split`, `fit:<instance>`, `predict:<instance>`, `target`,
    /// `aggregate_panels` or `aggregate_repeats`.
    #[serde(rename = "where")]
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NodeStats {
    pub requests: usize,
    pub fit_calls: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub mode: Mode,
    /// `None` iff no repetition succeeded (or the final aggregation failed).
    pub estimate: Option<Estimate>,
    /// Values of the successful repetitions, in repetition order.
    pub per_repetition: Vec<Estimate>,
    pub n_success: usize,
    pub n_fail: usize,
    pub errors: Vec<FailureRecord>,
    pub fit_calls: usize,
    pub cache_hits: usize,
    /// Counters per nuisance node, summed over tree copies.
    pub node_stats: IndexMap<String, NodeStats>,
    /// Digest of the fold assignment of every attempted repetition.
    pub fold_digests: Vec<String>,
}

impl RunResult {
    fn new(mode: Mode) -> Self {
        Self {
            mode,
            estimate: None,
            per_repetition: Vec::new(),
            n_success: 0,
            n_fail: 0,
            errors: Vec::new(),
            fit_calls: 0,
            cache_hits: 0,
            node_stats: IndexMap::new(),
            fold_digests: Vec::new(),
        }
    }

    /// Final scalar estimate, if any.
    pub fn value(&self) -> Option<f64> {
        self.estimate.as_ref().and_then(Estimate::as_scalar)
    }

    /// Final predictor, if any.
    pub fn predictor(&self) -> Option<&Predictor> {
        self.estimate.as_ref().and_then(Estimate::as_predictor)
    }

    pub fn repetition_values(&self) -> Vec<f64> {
        self.per_repetition.iter().filter_map(Estimate::as_scalar).collect()
    }

    pub fn node(&self, name: &str) -> NodeStats {
        self.node_stats.get(name).copied().unwrap_or_default()
    }
}

pub fn crossfit(data: &Dataset, m: &MethodSpec, seed: u64) -> Result<RunResult, EngineError> {
    crossfit_with(data, m, &RunOptions::seeded(seed))
}

pub fn crossfit_with(data: &Dataset, m: &MethodSpec, opts: &RunOptions) -> Result<RunResult, EngineError> {
    let methods: IndexMap<String, MethodSpec> = [("method".to_string(), m.clone())].into_iter().collect();
    let mut out = crossfit_multi_with(data, &methods, opts)?;
    Ok(out.swap_remove("method").expect("single method result"))
}

/// Runs several methods in one call. Methods with equal `K`, repetition
/// count and fold splitter share fold assignments and one model cache per
/// repetition; a failing method never affects the others.
pub fn crossfit_multi(
    data: &Dataset,
    methods: &IndexMap<String, MethodSpec>,
    seed: u64,
) -> Result<IndexMap<String, RunResult>, EngineError> {
    crossfit_multi_with(data, methods, &RunOptions::seeded(seed))
}

struct Job<'a> {
    method: &'a MethodSpec,
    plan: Plan,
    result: RunResult,
    stopped: bool,
}

pub fn crossfit_multi_with(
    data: &Dataset,
    methods: &IndexMap<String, MethodSpec>,
    opts: &RunOptions,
) -> Result<IndexMap<String, RunResult>, EngineError> {
    let mut jobs: Vec<Job<'_>> = Vec::with_capacity(methods.len());
    for (name, m) in methods {
        let report = validate_method(m);
        if !report.passed {
            return Err(EngineError::Invalid {
                name: name.clone(),
                report,
            });
        }
        if data.n_rows() < m.folds() {
            return Err(EngineError::TooFewRows {
                name: name.clone(),
                n: data.n_rows(),
                k: m.folds(),
            });
        }
        let sched = schedule(m).map_err(|source| EngineError::Schedule {
            name: name.clone(),
            source,
        })?;
        let set = sched.instances;
        let specs = set
            .instances
            .iter()
            .map(|inst| m.nuisances()[inst.node.as_str()].clone())
            .collect();
        jobs.push(Job {
            method: m,
            plan: Plan {
                instances: set.into(),
                specs: std::sync::Arc::new(specs),
                panels: sched.panels,
            },
            result: RunResult::new(m.mode()),
            stopped: false,
        });
    }

    let mut groups: IndexMap<(usize, usize, Option<u64>), Vec<usize>> = IndexMap::new();
    for (i, job) in jobs.iter().enumerate() {
        let m = job.method;
        let id = m.fold_split().map(|s| s.identity());
        groups.entry((m.folds(), m.repeats(), id)).or_default().push(i);
    }

    for ((k, repeats, _), members) in &groups {
        let splitter = jobs[members[0]].method.fold_split().cloned();
        for rep in 0..*repeats {
            if members.iter().all(|&i| jobs[i].stopped) {
                break;
            }
            let folds = split(data.n_rows(), *k, opts.seed, rep, splitter.as_ref());
            let mut cache = ModelCache::new(opts.cache);
            for &i in members {
                let job = &mut jobs[i];
                if job.stopped {
                    continue;
                }
                let outcome = match &folds {
                    Ok(f) => {
                        job.result.fold_digests.push(f.digest());
                        run_repetition(job, data, f, &mut cache)
                    }
                    Err(msg) => Err((None, Failure::new("fold_split", msg))),
                };
                record(job, rep, outcome);
            }
        }
    }

    for job in &mut jobs {
        finish(job);
    }
    Ok(methods.keys().cloned().zip(jobs.into_iter().map(|j| j.result)).collect())
}

fn split(
    n: usize,
    k: usize,
    seed: u64,
    rep: usize,
    splitter: Option<&crate::spec::FoldSplitter>,
) -> Result<FoldAssignment, String> {
    let folds = match splitter {
        Some(s) => s.split(n, k, seed, rep).map_err(|e| e.to_string())?,
        None => default_fold_split(n, k, seed, rep).map_err(|e| e.to_string())?,
    };
    if folds.n_rows() != n || folds.k() != k {
        return Err(format!(
            "splitter returned {} labels over {} folds, expected {n} over {k}",
            folds.n_rows(),
            folds.k()
        ));
    }
    Ok(folds)
}

type RepOutcome = Result<Estimate, (Option<usize>, Failure)>;

fn run_repetition(job: &mut Job<'_>, data: &Dataset, folds: &FoldAssignment, cache: &mut ModelCache) -> RepOutcome {
    let m = job.method;
    let runner = PanelRun {
        plan: &job.plan,
        target: m.target(),
        data,
        folds,
    };
    let mut values = Vec::with_capacity(m.folds());
    let mut predictors = Vec::new();
    for p in 0..m.folds() {
        match runner.run(p, cache, &mut job.result.node_stats).map_err(|f| (Some(p), f))? {
            PanelValue::Scalar(v) => values.push(v),
            PanelValue::Predictor(pr) => predictors.push(pr),
        }
    }
    let agg = m.aggregate_panels();
    let fail = |e: crate::BoxError| (None, Failure::new("aggregate_panels", e));
    match m.mode() {
        Mode::Estimate => agg.estimates(&values).map(Estimate::Scalar).map_err(fail),
        Mode::Predict => agg.predictors(predictors).map(Estimate::Predictor).map_err(fail),
    }
}

fn record(job: &mut Job<'_>, rep: usize, outcome: RepOutcome) {
    match outcome {
        Ok(v) => {
            job.result.n_success += 1;
            job.result.per_repetition.push(v);
        }
        Err((panel, f)) => {
            job.result.n_fail += 1;
            job.result.errors.push(FailureRecord {
                rep: Some(rep),
                panel,
                location: f.location,
                message: f.message,
            });
            if let Some(max) = job.method.max_fail() {
                if job.result.n_fail > max {
                    job.stopped = true;
                }
            }
        }
    }
}

fn finish(job: &mut Job<'_>) {
    let r = &mut job.result;
    r.fit_calls = r.node_stats.values().map(|s| s.fit_calls).sum();
    r.cache_hits = r.node_stats.values().map(|s| s.cache_hits).sum();
    if r.per_repetition.is_empty() {
        return;
    }
    let agg = job.method.aggregate_repeats();
    let out = match r.mode {
        Mode::Estimate => agg
            .estimates(&r.repetition_values())
            .map(Estimate::Scalar),
        Mode::Predict => agg
            .predictors(r.per_repetition.iter().filter_map(|e| e.as_predictor().cloned()).collect())
            .map(Estimate::Predictor),
    };
    match out {
        Ok(v) => r.estimate = Some(v),
        Err(e) => r.errors.push(FailureRecord {
            rep: None,
            panel: None,
            location: "aggregate_repeats".into(),
            message: e.to_string(),
        }),
    }
}
