//! Estimator-agnostic cross-fitting.
//!
//! A method is a target functional plus a DAG of nuisance learners. The
//! engine partitions the data into `K` folds per repetition, walks the `K`
//! cyclic panels of each repetition, trains every nuisance instance on its
//! allotted window of folds, feeds out-of-sample predictions to the target,
//! and aggregates the panel values and then the repetition values.
//!
//! ```text
//! tabular   Dataset, CSV ingestion, row subsets
//! spec      NuisanceSpec, Target, MethodSpec, validation, aggregators
//! folds     fold splitting, windows, tree expansion, allocation modes
//! engine    crossfit / crossfit_multi, reuse-aware cache, failure isolation
//! learners  OLS, ridge, IRLS logistic, constant and trace learners
//! recipes   PLR partialling-out and other targets, synthetic DGP
//! cli       JSON experiment config and the validate/schedule/run/simulate commands
//! ```
//!
//! Runnable walkthroughs live in `examples/`; see the README for the list.
//!
//! ```
//! use crossfit::prelude::*;
//!
//! let data = Dataset::from_columns([
//!     ("y", vec![3.0; 12]),
//!     ("x", (0..12).map(f64::from).collect()),
//! ]).unwrap();
//! let nuis_y = create_nuisance("nuis_y", LinearRegression::ols("y", ["x"]), 1, Vec::<String>::new()).unwrap();
//! let method = MethodSpec::builder(mse_target("y", "nuis_y"))
//!     .nuisance("nuis_y", nuis_y)
//!     .folds(3)
//!     .eval_fold(1)
//!     .build()
//!     .unwrap();
//! let result = crossfit(&data, &method, 7).unwrap();
//! assert!(result.value().unwrap().abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod engine;
pub mod folds;
mod graph;
pub mod learners;
pub mod recipes;
pub mod spec;
pub mod tabular;

use std::panic::{catch_unwind, AssertUnwindSafe};

/// Error type returned by user-supplied fit, predict, target and
/// aggregation callbacks.
pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Runs a user callback, turning a panic into an ordinary error so a single
/// misbehaving learner cannot take down a whole experiment grid.
pub(crate) fn guarded<T>(f: impl FnOnce() -> Result<T, BoxError>) -> Result<T, BoxError> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            Err(format!("panicked: {msg}").into())
        }
    }
}

pub mod prelude {
    pub use crate::engine::{crossfit, crossfit_multi, crossfit_with, Estimate, RunOptions, RunResult};
    pub use crate::folds::{
        allocate, default_fold_split, instance_set, min_folds_required, panel_eval_window,
        tree_expand, Allocation, FoldAssignment, PanelAllocation, Window,
    };
    pub use crate::learners::{
        logistic_fit, ols_fit, ridge_fit, ConstantLearner, LinearRegression, LogisticOptions,
        LogisticRegression, TraceLearner,
    };
    pub use crate::recipes::{
        dgp_plr, identity_pred_target, mse_target, plr_target, ps_augmented_outcome_nuisance,
        PlrParams,
    };
    pub use crate::spec::{
        create_nuisance, learner_fn, mean_estimate, mean_predictor, median_estimate,
        median_predictor, validate_method, Aggregator, FoldSplitter, Learner, MethodSpec, Mode,
        NuisancePredictions, NuisanceSpec, Predictions, Predictor, Target, ValidationReport,
    };
    pub use crate::tabular::{read_csv, Dataset};
    pub use crate::BoxError;
}
