use serde::{Deserialize, Serialize};

use super::{ConstantLearner, LinearRegression, LogisticOptions, LogisticRegression, TraceLearner};
use crate::spec::{create_nuisance, NuisanceSpec, SpecError};

fn default_max_iter() -> usize {
    LogisticOptions::default().max_iter
}
fn default_tol() -> f64 {
    LogisticOptions::default().tol
}
fn default_ridge_eps() -> f64 {
    LogisticOptions::default().ridge_eps
}
fn default_fold_column() -> String {
    "fold".to_string()
}

/// Declarative learner description, keyed by `kind`:
/// `ols`, `ridge`, `logistic`, `constant` or `trace`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LearnerConfig {
    Ols {
        y: String,
        x: Vec<String>,
        #[serde(default)]
        dep_features: Vec<String>,
    },
    Ridge {
        y: String,
        x: Vec<String>,
        lambda: f64,
        #[serde(default)]
        dep_features: Vec<String>,
    },
    Logistic {
        y: String,
        x: Vec<String>,
        #[serde(default)]
        dep_features: Vec<String>,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_ridge_eps")]
        ridge_eps: f64,
    },
    Constant {
        value: f64,
    },
    Trace {
        #[serde(default = "default_fold_column")]
        fold_column: String,
    },
}

impl LearnerConfig {
    pub const KINDS: [&'static str; 5] = ["ols", "ridge", "logistic", "constant", "trace"];

    pub fn kind(&self) -> &'static str {
        match self {
            LearnerConfig::Ols { .. } => "ols",
            LearnerConfig::Ridge { .. } => "ridge",
            LearnerConfig::Logistic { .. } => "logistic",
            LearnerConfig::Constant { .. } => "constant",
            LearnerConfig::Trace { .. } => "trace",
        }
    }

    /// Instantiates the learner as a nuisance node.
    pub fn build<I, S>(&self, id: &str, train_fold: usize, deps: I) -> Result<NuisanceSpec, SpecError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        match self {
            LearnerConfig::Ols { y, x, dep_features } => create_nuisance(
                id,
                LinearRegression::ols(y.clone(), x.clone()).with_dep_features(dep_features.clone()),
                train_fold,
                deps,
            ),
            LearnerConfig::Ridge {
                y,
                x,
                lambda,
                dep_features,
            } => create_nuisance(
                id,
                LinearRegression::ridge(y.clone(), x.clone(), *lambda).with_dep_features(dep_features.clone()),
                train_fold,
                deps,
            ),
            LearnerConfig::Logistic {
                y,
                x,
                dep_features,
                max_iter,
                tol,
                ridge_eps,
            } => create_nuisance(
                id,
                LogisticRegression::new(y.clone(), x.clone())
                    .with_dep_features(dep_features.clone())
                    .with_options(LogisticOptions {
                        max_iter: *max_iter,
                        tol: *tol,
                        ridge_eps: *ridge_eps,
                    }),
                train_fold,
                deps,
            ),
            LearnerConfig::Constant { value } => create_nuisance(id, ConstantLearner(*value), train_fold, deps),
            LearnerConfig::Trace { fold_column } => {
                create_nuisance(id, TraceLearner::new(fold_column.clone()), train_fold, deps)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_and_round_trip() {
        let cfg: LearnerConfig = serde_json::from_str(r#"{"kind":"logistic","y":"d","x":["x1"]}"#).unwrap();
        assert_eq!(
            cfg,
            LearnerConfig::Logistic {
                y: "d".into(),
                x: vec!["x1".into()],
                dep_features: vec![],
                max_iter: 50,
                tol: 1e-8,
                ridge_eps: 1e-6,
            }
        );
        let back: LearnerConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let trace: LearnerConfig = serde_json::from_str(r#"{"kind":"trace"}"#).unwrap();
        assert_eq!(trace.kind(), "trace");
    }

    #[test]
    fn unknown_kind_and_fields_rejected() {
        assert!(serde_json::from_str::<LearnerConfig>(r#"{"kind":"forest"}"#).is_err());
        assert!(serde_json::from_str::<LearnerConfig>(r#"{"kind":"constant","value":1,"extra":2}"#).is_err());
    }

    #[test]
    fn builds_nuisances_with_structural_signatures() {
        let cfg = LearnerConfig::Ols {
            y: "y".into(),
            x: vec!["x1".into()],
            dep_features: vec![],
        };
        let a = cfg.build("nuis_g", 2, Vec::<String>::new()).unwrap();
        let b = cfg.build("nuis_g", 2, Vec::<String>::new()).unwrap();
        assert_eq!(a.signature(), b.signature());
        assert_eq!(a.train_fold(), 2);
    }
}
