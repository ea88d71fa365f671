use std::any::Any;
use std::fmt;
use std::marker::PhantomData;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use super::SpecError;
use crate::tabular::Dataset;
use crate::{guarded, BoxError};

/// Per-row output of a nuisance `predict` or a predict-mode target.
///
/// Numeric in normal use. Textual tokens exist so trace learners can carry
/// fold provenance through the schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Numeric(Vec<f64>),
    Tokens(Vec<String>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Numeric(v) => v.len(),
            Predictions::Tokens(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Predictions::Numeric(v) => Some(v),
            Predictions::Tokens(_) => None,
        }
    }

    pub fn as_tokens(&self) -> Option<&[String]> {
        match self {
            Predictions::Tokens(v) => Some(v),
            Predictions::Numeric(_) => None,
        }
    }
}

impl From<Vec<f64>> for Predictions {
    fn from(v: Vec<f64>) -> Self {
        Predictions::Numeric(v)
    }
}

impl From<Vec<String>> for Predictions {
    fn from(v: Vec<String>) -> Self {
        Predictions::Tokens(v)
    }
}

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("no nuisance predictions named {name:?} (have: {})", available.join(", "))]
    Missing { name: String, available: Vec<String> },
    #[error("nuisance predictions {0:?} are not numeric")]
    NotNumeric(String),
    #[error("nuisance predictions {0:?} are not trace tokens")]
    NotTokens(String),
}

/// Named prediction vectors handed to a target or to a dependent learner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NuisancePredictions(IndexMap<String, Predictions>);

impl NuisancePredictions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, preds: impl Into<Predictions>) {
        self.0.insert(name.into(), preds.into());
    }

    pub fn get(&self, name: &str) -> Result<&Predictions, PredictionError> {
        self.0.get(name).ok_or_else(|| PredictionError::Missing {
            name: name.to_string(),
            available: self.0.keys().cloned().collect(),
        })
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64], PredictionError> {
        self.get(name)?
            .as_numeric()
            .ok_or_else(|| PredictionError::NotNumeric(name.to_string()))
    }

    pub fn tokens(&self, name: &str) -> Result<&[String], PredictionError> {
        self.get(name)?
            .as_tokens()
            .ok_or_else(|| PredictionError::NotTokens(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Predictions)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>, P: Into<Predictions>> FromIterator<(S, P)> for NuisancePredictions {
    fn from_iter<I: IntoIterator<Item = (S, P)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// Fit/predict contract of a nuisance node.
///
/// `deps` carries the predictions of this node's declared dependencies on
/// exactly the rows of `train` (for `fit`) or `data` (for `predict`).
/// Implementations must be deterministic: the cache reuses fitted models
/// whenever node, window and upstream context coincide.
pub trait Learner: Send + Sync + 'static {
    type Model: Send + Sync + 'static;

    fn fit(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<Self::Model, BoxError>;

    fn predict(
        &self,
        model: &Self::Model,
        data: &Dataset,
        deps: &NuisancePredictions,
    ) -> Result<Predictions, BoxError>;

    /// Structural description of the learner. Two learners with equal
    /// signatures are assumed to produce identical models on identical
    /// inputs, which lets the cache share fits across methods.
    fn signature(&self) -> Option<String> {
        None
    }
}

pub(crate) type Model = Arc<dyn Any + Send + Sync>;

pub(crate) trait DynLearner: Send + Sync {
    fn fit_dyn(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<Model, BoxError>;
    fn predict_dyn(
        &self,
        model: &Model,
        data: &Dataset,
        deps: &NuisancePredictions,
    ) -> Result<Predictions, BoxError>;
}

impl<L: Learner> DynLearner for L {
    fn fit_dyn(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<Model, BoxError> {
        Ok(Arc::new(self.fit(train, deps)?))
    }

    fn predict_dyn(
        &self,
        model: &Model,
        data: &Dataset,
        deps: &NuisancePredictions,
    ) -> Result<Predictions, BoxError> {
        let model = model
            .downcast_ref::<L::Model>()
            .ok_or("model type does not match learner")?;
        self.predict(model, data, deps)
    }
}

/// Learner assembled from a pair of closures; see [`learner_fn`].
pub struct FnLearner<M, F, P> {
    fit: F,
    predict: P,
    _model: PhantomData<fn() -> M>,
}

impl<M, F, P> Learner for FnLearner<M, F, P>
where
    M: Send + Sync + 'static,
    F: Fn(&Dataset, &NuisancePredictions) -> Result<M, BoxError> + Send + Sync + 'static,
    P: Fn(&M, &Dataset, &NuisancePredictions) -> Result<Predictions, BoxError>
        + Send
        + Sync
        + 'static,
{
    type Model = M;

    fn fit(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<M, BoxError> {
        (self.fit)(train, deps)
    }

    fn predict(
        &self,
        model: &M,
        data: &Dataset,
        deps: &NuisancePredictions,
    ) -> Result<Predictions, BoxError> {
        (self.predict)(model, data, deps)
    }
}

/// Wraps `fit` and `predict` closures as a [`Learner`].
pub fn learner_fn<M, F, P>(fit: F, predict: P) -> FnLearner<M, F, P>
where
    M: Send + Sync + 'static,
    F: Fn(&Dataset, &NuisancePredictions) -> Result<M, BoxError> + Send + Sync + 'static,
    P: Fn(&M, &Dataset, &NuisancePredictions) -> Result<Predictions, BoxError>
        + Send
        + Sync
        + 'static,
{
    FnLearner {
        fit,
        predict,
        _model: PhantomData,
    }
}

static NEXT_TOKEN: AtomicU64 = AtomicU64::new(0);

/// A named nuisance node: learner, training width and declared dependencies.
///
/// Cloning shares the learner; a clone registered under a second name in the
/// same method is treated as the same node.
#[derive(Clone)]
pub struct NuisanceSpec {
    id: Arc<str>,
    learner: Arc<dyn DynLearner>,
    train_fold: usize,
    deps: Vec<String>,
    signature: Arc<str>,
}

impl fmt::Debug for NuisanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NuisanceSpec")
            .field("id", &self.id)
            .field("train_fold", &self.train_fold)
            .field("deps", &self.deps)
            .field("signature", &self.signature)
            .finish()
    }
}

/// Builds and validates a nuisance node.
pub fn create_nuisance<L, I, S>(
    id: impl Into<String>,
    learner: L,
    train_fold: usize,
    deps: I,
) -> Result<NuisanceSpec, SpecError>
where
    L: Learner,
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let id: String = id.into();
    if id.is_empty() {
        return Err(SpecError::EmptyId);
    }
    if train_fold < 1 {
        return Err(SpecError::TrainFold { id, train_fold });
    }
    let deps: Vec<String> = deps.into_iter().map(Into::into).collect();
    for (i, d) in deps.iter().enumerate() {
        if *d == id {
            return Err(SpecError::SelfDependency(id));
        }
        if deps[..i].contains(d) {
            return Err(SpecError::DuplicateDependency { id, dep: d.clone() });
        }
    }
    let signature = learner.signature().unwrap_or_else(|| {
        format!("{id}#{}", NEXT_TOKEN.fetch_add(1, Ordering::Relaxed))
    });
    Ok(NuisanceSpec {
        id: id.into(),
        learner: Arc::new(learner),
        train_fold,
        deps,
        signature: signature.into(),
    })
}

impl NuisanceSpec {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn train_fold(&self) -> usize {
        self.train_fold
    }

    pub fn deps(&self) -> &[String] {
        &self.deps
    }

    pub fn signature(&self) -> &str {
        &self.signature
    }

    /// Overrides the structural signature used for cache keys.
    pub fn with_signature(mut self, signature: impl Into<String>) -> Self {
        self.signature = signature.into().into();
        self
    }

    /// Same node for graph purposes: a clone of the same spec.
    pub(crate) fn is_alias_of(&self, other: &NuisanceSpec) -> bool {
        Arc::ptr_eq(&self.learner, &other.learner)
            && self.id == other.id
            && self.train_fold == other.train_fold
            && self.deps == other.deps
    }

    pub(crate) fn fit(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<Model, BoxError> {
        guarded(|| self.learner.fit_dyn(train, deps))
    }

    pub(crate) fn predict(
        &self,
        model: &Model,
        data: &Dataset,
        deps: &NuisancePredictions,
    ) -> Result<Predictions, BoxError> {
        let out = guarded(|| self.learner.predict_dyn(model, data, deps))?;
        if out.len() != data.n_rows() {
            return Err(format!(
                "predict returned {} values for {} rows",
                out.len(),
                data.n_rows()
            )
            .into());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noop() -> impl Learner {
        learner_fn(
            |_d: &Dataset, _p: &NuisancePredictions| Ok(()),
            |_m: &(), d: &Dataset, _p: &NuisancePredictions| Ok(vec![0.0; d.n_rows()].into()),
        )
    }

    #[test]
    fn create_nuisance_cases() {
        let m = create_nuisance("nuis_m", noop(), 2, Vec::<String>::new()).unwrap();
        assert_eq!(m.deps().len(), 0);
        assert_eq!(m.train_fold(), 2);
        let g = create_nuisance("nuis_g_ps", noop(), 1, ["nuis_m"]).unwrap();
        assert_eq!(g.deps(), ["nuis_m"]);
        assert!(matches!(
            create_nuisance("nuis_g_ps", noop(), 1, ["nuis_g_ps"]),
            Err(SpecError::SelfDependency(_))
        ));
        assert!(matches!(
            create_nuisance("", noop(), 1, Vec::<String>::new()),
            Err(SpecError::EmptyId)
        ));
        assert!(matches!(
            create_nuisance("a", noop(), 0, Vec::<String>::new()),
            Err(SpecError::TrainFold { .. })
        ));
        assert!(matches!(
            create_nuisance("a", noop(), 1, ["b", "b"]),
            Err(SpecError::DuplicateDependency { .. })
        ));
    }

    #[test]
    fn closure_signatures_are_unique_clones_alias() {
        let a = create_nuisance("a", noop(), 1, Vec::<String>::new()).unwrap();
        let b = create_nuisance("a", noop(), 1, Vec::<String>::new()).unwrap();
        assert_ne!(a.signature(), b.signature());
        assert!(a.clone().is_alias_of(&a));
        assert!(!a.is_alias_of(&b));
    }

    #[test]
    fn panicking_predict_becomes_error() {
        let spec = create_nuisance(
            "p",
            learner_fn(
                |_d: &Dataset, _p: &NuisancePredictions| Ok(()),
                |_m: &(), _d: &Dataset, _p: &NuisancePredictions| -> Result<Predictions, BoxError> {
                    panic!("boom")
                },
            ),
            1,
            Vec::<String>::new(),
        )
        .unwrap();
        let data = Dataset::from_columns([("x", vec![1.0])]).unwrap();
        let model = spec.fit(&data, &NuisancePredictions::new()).unwrap();
        let err = spec.predict(&model, &data, &NuisancePredictions::new()).unwrap_err();
        assert!(err.to_string().contains("boom"));
    }

    #[test]
    fn wrong_length_prediction_rejected() {
        let spec = create_nuisance(
            "p",
            learner_fn(
                |_d: &Dataset, _p: &NuisancePredictions| Ok(()),
                |_m: &(), _d: &Dataset, _p: &NuisancePredictions| Ok(vec![1.0].into()),
            ),
            1,
            Vec::<String>::new(),
        )
        .unwrap();
        let data = Dataset::from_columns([("x", vec![1.0, 2.0])]).unwrap();
        let model = spec.fit(&data, &NuisancePredictions::new()).unwrap();
        assert!(spec.predict(&model, &data, &NuisancePredictions::new()).is_err());
    }
}
