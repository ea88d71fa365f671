//! Built-in deterministic learners.
//!
//! All of them take explicit column lists and implement [`Learner`], so they
//! can be handed straight to [`create_nuisance`](crate::spec::create_nuisance).
//!
//! [`Learner`]: crate::spec::Learner

mod linear;
mod logistic;
mod registry;
mod simple;

pub use linear::{ols_fit, ridge_fit, LinearModel, LinearRegression};
pub use logistic::{logistic_fit, LogisticModel, LogisticOptions, LogisticRegression};
pub use registry::LearnerConfig;
pub use simple::{parse_trace, ConstantLearner, TraceLearner, TraceToken};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::spec::{NuisancePredictions, PredictionError};
use crate::tabular::{Dataset, TabularError};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("no training rows")]
    EmptyData,
    #[error("lambda must be a finite non-negative number, got {0}")]
    NegativeLambda(f64),
    #[error("normal equations are singular even after jitter")]
    Singular,
    #[error("response {column:?} must be 0 or 1, found {value} at row {row}")]
    NonBinary { column: String, row: usize, value: f64 },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("fold column {column:?} holds {value} at row {row}, expected a fold index")]
    BadFoldLabel { column: String, row: usize, value: f64 },
    #[error("malformed trace token {0:?}")]
    BadTrace(String),
    #[error(transparent)]
    Data(#[from] TabularError),
    #[error(transparent)]
    Predictions(#[from] PredictionError),
}

/// Design matrix (without intercept column) and response vector.
pub(crate) fn design<S: AsRef<str>>(
    data: &Dataset,
    y: &str,
    x: &[S],
) -> Result<(DMatrix<f64>, DVector<f64>), LearnerError> {
    let yv = data.column(y)?;
    if data.n_rows() == 0 {
        return Err(LearnerError::EmptyData);
    }
    let cols = x
        .iter()
        .map(|c| data.column(c.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let n = data.n_rows();
    let xm = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    Ok((xm, DVector::from_column_slice(yv)))
}

/// Copies the named dependency predictions into `data` as regressors.
pub(crate) fn augment(
    data: &Dataset,
    deps: &NuisancePredictions,
    names: &[String],
) -> Result<Dataset, LearnerError> {
    let mut out = data.clone();
    for name in names {
        let values = deps.numeric(name)?;
        out = out.with_column(name, values.to_vec())?;
    }
    Ok(out)
}
