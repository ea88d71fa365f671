use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{validate_method, Aggregator, NuisancePredictions, NuisanceSpec, Predictions, SpecError};
use crate::folds::{Allocation, FoldAssignment};
use crate::tabular::Dataset;
use crate::{guarded, BoxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Estimate,
    Predict,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Estimate => "estimate",
            Mode::Predict => "predict",
        })
    }
}

type EstimateFn = dyn Fn(&Dataset, &NuisancePredictions) -> Result<f64, BoxError> + Send + Sync;
type PredictFn =
    dyn Fn(&Dataset, &NuisancePredictions) -> Result<Predictions, BoxError> + Send + Sync;

#[derive(Clone)]
pub(crate) enum TargetFn {
    Estimate(Arc<EstimateFn>),
    Predict(Arc<PredictFn>),
}

/// Target functional with its declared nuisance arguments.
///
/// The engine passes exactly the declared arguments, by name, evaluated on
/// the rows the target receives.
#[derive(Clone)]
pub struct Target {
    args: Vec<String>,
    func: TargetFn,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Target")
            .field("args", &self.args)
            .field("mode", &self.mode())
            .finish()
    }
}

impl Target {
    /// Scalar-valued target for `mode = estimate`.
    pub fn estimate<I, S, F>(args: I, f: F) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        F: Fn(&Dataset, &NuisancePredictions) -> Result<f64, BoxError> + Send + Sync + 'static,
    {
        Self {
            args: args.into_iter().map(Into::into).collect(),
            func: TargetFn::Estimate(Arc::new(f)),
        }
    }

    /// Prediction-valued target for `mode = predict`.
    pub fn predict<I, S, F>(args: I, f: F) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        F: Fn(&Dataset, &NuisancePredictions) -> Result<Predictions, BoxError>
            + Send
            + Sync
            + 'static,
    {
        Self {
            args: args.into_iter().map(Into::into).collect(),
            func: TargetFn::Predict(Arc::new(f)),
        }
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    pub fn mode(&self) -> Mode {
        match self.func {
            TargetFn::Estimate(_) => Mode::Estimate,
            TargetFn::Predict(_) => Mode::Predict,
        }
    }

    pub(crate) fn eval_estimate(&self, data: &Dataset, preds: &NuisancePredictions) -> Result<f64, BoxError> {
        match &self.func {
            TargetFn::Estimate(f) => guarded(|| f(data, preds)),
            TargetFn::Predict(_) => Err("predict-mode target evaluated as an estimate".into()),
        }
    }

    pub(crate) fn eval_predict(
        &self,
        data: &Dataset,
        preds: &NuisancePredictions,
    ) -> Result<Predictions, BoxError> {
        match &self.func {
            TargetFn::Predict(f) => guarded(|| f(data, preds)),
            TargetFn::Estimate(_) => Err("estimate-mode target evaluated as a predictor".into()),
        }
    }
}

type SplitFn = dyn Fn(usize, usize, u64, usize) -> Result<FoldAssignment, BoxError> + Send + Sync;

static NEXT_SPLITTER: AtomicU64 = AtomicU64::new(0);

/// User-supplied deterministic splitter `(n, K, seed, rep_index) -> folds`.
///
/// Clones share an identity; methods in one `crossfit_multi` call share fold
/// assignments only when their splitters share it.
#[derive(Clone)]
pub struct FoldSplitter {
    id: u64,
    func: Arc<SplitFn>,
}

impl fmt::Debug for FoldSplitter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FoldSplitter#{}", self.id)
    }
}

impl FoldSplitter {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(usize, usize, u64, usize) -> Result<FoldAssignment, BoxError> + Send + Sync + 'static,
    {
        Self {
            id: NEXT_SPLITTER.fetch_add(1, Ordering::Relaxed),
            func: Arc::new(f),
        }
    }

    /// Splitter reading fold labels from a column of the data.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        Self::new(move |n, k, _seed, _rep| {
            if labels.len() != n {
                return Err(format!("{} fold labels for {n} rows", labels.len()).into());
            }
            Ok(FoldAssignment::new(labels.clone(), k)?)
        })
    }

    pub fn identity(&self) -> u64 {
        self.id
    }

    pub fn split(&self, n: usize, k: usize, seed: u64, rep: usize) -> Result<FoldAssignment, BoxError> {
        guarded(|| (self.func)(n, k, seed, rep))
    }
}

/// A validated cross-fitting method.
#[derive(Clone, Debug)]
pub struct MethodSpec {
    pub(crate) target: Target,
    pub(crate) nuisances: IndexMap<String, NuisanceSpec>,
    pub(crate) folds: usize,
    pub(crate) repeats: usize,
    pub(crate) eval_fold: usize,
    pub(crate) allocation: Allocation,
    pub(crate) aggregate_panels: Aggregator,
    pub(crate) aggregate_repeats: Aggregator,
    pub(crate) max_fail: Option<usize>,
    pub(crate) fold_split: Option<FoldSplitter>,
}

impl MethodSpec {
    /// Starts a method with `K = 5`, one repetition, `eval_fold = 1` in
    /// estimate mode (0 in predict mode), overlap allocation, mean over
    /// panels and median over repetitions.
    pub fn builder(target: Target) -> MethodBuilder {
        let eval_fold = match target.mode() {
            Mode::Estimate => 1,
            Mode::Predict => 0,
        };
        MethodBuilder {
            spec: MethodSpec {
                target,
                nuisances: IndexMap::new(),
                folds: 5,
                repeats: 1,
                eval_fold,
                allocation: Allocation::Overlap,
                aggregate_panels: Aggregator::Mean,
                aggregate_repeats: Aggregator::Median,
                max_fail: None,
                fold_split: None,
            },
        }
    }

    pub fn target(&self) -> &Target {
        &self.target
    }
    pub fn mode(&self) -> Mode {
        self.target.mode()
    }
    pub fn nuisances(&self) -> &IndexMap<String, NuisanceSpec> {
        &self.nuisances
    }
    pub fn folds(&self) -> usize {
        self.folds
    }
    pub fn repeats(&self) -> usize {
        self.repeats
    }
    pub fn eval_fold(&self) -> usize {
        self.eval_fold
    }
    pub fn allocation(&self) -> Allocation {
        self.allocation
    }
    pub fn max_fail(&self) -> Option<usize> {
        self.max_fail
    }
    pub fn fold_split(&self) -> Option<&FoldSplitter> {
        self.fold_split.as_ref()
    }
    pub fn aggregate_panels(&self) -> &Aggregator {
        &self.aggregate_panels
    }
    pub fn aggregate_repeats(&self) -> &Aggregator {
        &self.aggregate_repeats
    }

    /// Same method under a different allocation mode, revalidated.
    pub fn with_allocation(&self, allocation: Allocation) -> Result<MethodSpec, SpecError> {
        MethodBuilder {
            spec: MethodSpec {
                allocation,
                ..self.clone()
            },
        }
        .build()
    }
}

#[derive(Clone, Debug)]
pub struct MethodBuilder {
    spec: MethodSpec,
}

impl MethodBuilder {
    pub fn nuisance(mut self, name: impl Into<String>, spec: NuisanceSpec) -> Self {
        self.spec.nuisances.insert(name.into(), spec);
        self
    }

    pub fn folds(mut self, k: usize) -> Self {
        self.spec.folds = k;
        self
    }

    pub fn repeats(mut self, repeats: usize) -> Self {
        self.spec.repeats = repeats;
        self
    }

    pub fn eval_fold(mut self, eval_fold: usize) -> Self {
        self.spec.eval_fold = eval_fold;
        self
    }

    pub fn allocation(mut self, allocation: Allocation) -> Self {
        self.spec.allocation = allocation;
        self
    }

    pub fn aggregate_panels(mut self, agg: Aggregator) -> Self {
        self.spec.aggregate_panels = agg;
        self
    }

    pub fn aggregate_repeats(mut self, agg: Aggregator) -> Self {
        self.spec.aggregate_repeats = agg;
        self
    }

    pub fn max_fail(mut self, max_fail: usize) -> Self {
        self.spec.max_fail = Some(max_fail);
        self
    }

    pub fn fold_split(mut self, splitter: FoldSplitter) -> Self {
        self.spec.fold_split = Some(splitter);
        self
    }

    /// Validates and returns the method.
    pub fn build(self) -> Result<MethodSpec, SpecError> {
        let report = validate_method(&self.spec);
        if report.passed {
            Ok(self.spec)
        } else {
            Err(SpecError::Invalid(report))
        }
    }

    /// Returns the method without validating it, for tooling that wants to
    /// inspect a [`ValidationReport`](super::ValidationReport) of an invalid
    /// specification. The engine revalidates before running.
    pub fn build_unchecked(self) -> MethodSpec {
        self.spec
    }
}
