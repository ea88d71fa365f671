//! Nuisance and method specifications.
//!
//! [`create_nuisance`] declares a node of the nuisance graph.
//! [`MethodSpec::builder`] combines a [`Target`] with named nuisances and the
//! fold geometry, and validates the whole specification before returning it.

mod aggregate;
mod method;
mod nuisance;
mod validate;

pub use aggregate::{
    mean_estimate, mean_predictor, median_estimate, median_predictor, AggregateError, Aggregator,
    Predictor,
};
pub use method::{FoldSplitter, MethodBuilder, MethodSpec, Mode, Target};
pub use nuisance::{
    create_nuisance, learner_fn, FnLearner, Learner, NuisancePredictions, NuisanceSpec,
    PredictionError, Predictions,
};
pub(crate) use nuisance::Model;
pub use validate::{validate_method, CheckKind, ValidationReport, Violation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("nuisance id must be non-empty")]
    EmptyId,
    #[error("nuisance {id:?}: train_fold must be at least 1 (got {train_fold})")]
    TrainFold { id: String, train_fold: usize },
    #[error("nuisance {0:?} depends on itself")]
    SelfDependency(String),
    #[error("nuisance {id:?} lists dependency {dep:?} more than once")]
    DuplicateDependency { id: String, dep: String },
    #[error("invalid method: {0}")]
    Invalid(ValidationReport),
}
