use nalgebra::{DMatrix, DVector};

use super::linear::solve_spd;
use super::{augment, design, LearnerError};
use crate::spec::{Learner, NuisancePredictions, Predictions};
use crate::tabular::Dataset;
use crate::BoxError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Ridge penalty on every coefficient, intercept included. Keeps the
    /// fit finite on separable or single-class data.
    pub ridge_eps: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-8,
            ridge_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub feature_names: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn linear_predictor(&self, data: &Dataset) -> Result<Vec<f64>, LearnerError> {
        let cols = self
            .feature_names
            .iter()
            .map(|n| data.column(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..data.n_rows())
            .map(|i| {
                self.intercept
                    + cols
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(c, b)| c[i] * b)
                        .sum::<f64>()
            })
            .collect())
    }

    /// Probability of class 1 for every row.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>, LearnerError> {
        Ok(self.linear_predictor(data)?.into_iter().map(sigmoid).collect())
    }
}

/// Ridge-stabilized IRLS starting from all-zero coefficients.
pub fn logistic_fit<S: AsRef<str>>(
    data: &Dataset,
    y: &str,
    x: &[S],
    opts: &LogisticOptions,
) -> Result<LogisticModel, LearnerError> {
    if opts.max_iter == 0 {
        return Err(LearnerError::InvalidOption("max_iter must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(LearnerError::InvalidOption(format!("tol must be positive, got {}", opts.tol)));
    }
    if !(opts.ridge_eps >= 0.0) || !opts.ridge_eps.is_finite() {
        return Err(LearnerError::InvalidOption(format!(
            "ridge_eps must be non-negative, got {}",
            opts.ridge_eps
        )));
    }
    let (xm, yv) = design(data, y, x)?;
    if let Some((row, &value)) = yv.iter().enumerate().find(|(_, v)| **v != 0.0 && **v != 1.0) {
        return Err(LearnerError::NonBinary {
            column: y.to_string(),
            row,
            value,
        });
    }
    let n = xm.nrows();
    let p = xm.ncols() + 1;
    let z = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { xm[(i, j - 1)] });
    let eps = opts.ridge_eps;
    let objective = |theta: &DVector<f64>| -> f64 {
        let eta = &z * theta;
        let ll: f64 = eta.iter().zip(yv.iter()).map(|(e, yi)| yi * e - softplus(*e)).sum();
        ll - 0.5 * eps * theta.norm_squared()
    };

    let mut theta = DVector::<f64>::zeros(p);
    let mut current = objective(&theta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let eta = &z * &theta;
        let prob = eta.map(sigmoid);
        let w = prob.map(|q| q * (1.0 - q));
        let grad = z.transpose() * (&yv - &prob) - &theta * eps;
        let mut zw = z.clone();
        for (i, mut row) in zw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let hess = z.transpose() * zw;
        let step = solve_spd(&hess, &grad, eps).ok_or(LearnerError::Singular)?;

        // Newton step with halving if it would lower the penalized likelihood.
        let mut scale = 1.0;
        let mut next = &theta + &step;
        let mut value = objective(&next);
        while value < current && scale > 1e-10 {
            scale *= 0.5;
            next = &theta + &step * scale;
            value = objective(&next);
        }
        let delta = (&step * scale).amax();
        theta = next;
        current = value;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(LogisticModel {
        intercept: theta[0],
        coefficients: theta.iter().skip(1).copied().collect(),
        feature_names: x.iter().map(|s| s.as_ref().to_string()).collect(),
        converged,
        iterations,
    })
}

/// Logistic propensity learner; predictions are probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub target: String,
    pub features: Vec<String>,
    pub dep_features: Vec<String>,
    pub options: LogisticOptions,
}

impl LogisticRegression {
    pub fn new<I, S>(target: impl Into<String>, features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            target: target.into(),
            features: features.into_iter().map(Into::into).collect(),
            dep_features: Vec::new(),
            options: LogisticOptions::default(),
        }
    }

    pub fn with_options(mut self, options: LogisticOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_dep_features<I, S>(mut self, deps: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.dep_features = deps.into_iter().map(Into::into).collect();
        self
    }
}

impl Learner for LogisticRegression {
    type Model = LogisticModel;

    fn fit(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<LogisticModel, BoxError> {
        let data = augment(train, deps, &self.dep_features)?;
        let features: Vec<&str> = self
            .features
            .iter()
            .chain(&self.dep_features)
            .map(String::as_str)
            .collect();
        Ok(logistic_fit(&data, &self.target, &features, &self.options)?)
    }

    fn predict(
        &self,
        model: &LogisticModel,
        data: &Dataset,
        deps: &NuisancePredictions,
    ) -> Result<Predictions, BoxError> {
        let data = augment(data, deps, &self.dep_features)?;
        Ok(model.predict(&data)?.into())
    }

    fn signature(&self) -> Option<String> {
        let o = &self.options;
        Some(format!(
            "logistic(y={};x={};deps={};max_iter={};tol={:?};ridge_eps={:?})",
            self.target,
            self.features.join(","),
            self.dep_features.join(","),
            o.max_iter,
            o.tol,
            o.ridge_eps
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_data_has_zero_intercept() {
        let d = Dataset::from_columns([
            ("x", vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, -1.5, 1.5]),
            ("y", vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]),
        ])
        .unwrap();
        let m = logistic_fit(&d, "y", &["x"], &LogisticOptions::default()).unwrap();
        assert!(m.converged);
        assert!(m.intercept.abs() < 1e-8, "{}", m.intercept);
    }

    // Oracle for the intercept-only fit on all-ones labels: the penalized
    // score n(1 - σ(b)) - εb = 0, solved by bisection.
    #[test]
    fn all_ones_matches_one_parameter_oracle() {
        let n = 10;
        let d = Dataset::from_columns([("y", vec![1.0; n])]).unwrap();
        let opts = LogisticOptions::default();
        let m = logistic_fit::<&str>(&d, "y", &[], &opts).unwrap();
        let score = |b: f64| n as f64 * (1.0 - 1.0 / (1.0 + (-b).exp())) - opts.ridge_eps * b;
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(m.converged);
        assert!((m.intercept - lo).abs() < 1e-6, "{} vs {lo}", m.intercept);
        let p = m.predict(&d).unwrap();
        assert!(p.iter().all(|&q| (1.0 - 1e-5..1.0).contains(&q)));
    }

    #[test]
    fn separable_pair_stays_finite_and_ordered() {
        let d = Dataset::from_columns([("x", vec![-1.0, 1.0]), ("y", vec![0.0, 1.0])]).unwrap();
        let m = logistic_fit(&d, "y", &["x"], &LogisticOptions::default()).unwrap();
        assert!(m.coefficients[0].is_finite() && m.intercept.is_finite());
        let p = m.predict(&d).unwrap();
        assert!(p[0] < 0.5 && 0.5 < p[1]);
    }

    #[test]
    fn rejects_non_binary_response() {
        let d = Dataset::from_columns([("x", vec![1.0, 2.0]), ("y", vec![0.0, 0.3])]).unwrap();
        assert!(matches!(
            logistic_fit(&d, "y", &["x"], &LogisticOptions::default()),
            Err(LearnerError::NonBinary { row: 1, .. })
        ));
    }

    #[test]
    fn predictions_monotone_in_linear_predictor() {
        let d = Dataset::from_columns([
            ("x", vec![-3.0, -1.0, 0.0, 0.2, 1.0, 2.5, -0.7, 0.9]),
            ("y", vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]),
        ])
        .unwrap();
        let m = logistic_fit(&d, "y", &["x"], &LogisticOptions::default()).unwrap();
        let eta = m.linear_predictor(&d).unwrap();
        let p = m.predict(&d).unwrap();
        let mut idx: Vec<usize> = (0..eta.len()).collect();
        idx.sort_by(|&a, &b| eta[a].total_cmp(&eta[b]));
        for w in idx.windows(2) {
            assert!(p[w[0]] <= p[w[1]]);
        }
        assert!(p.iter().all(|&q| q > 0.0 && q < 1.0));
    }

    #[test]
    fn stops_at_max_iter_without_convergence() {
        let d = Dataset::from_columns([("x", vec![-1.0, 1.0]), ("y", vec![0.0, 1.0])]).unwrap();
        let opts = LogisticOptions {
            max_iter: 1,
            ..Default::default()
        };
        let m = logistic_fit(&d, "y", &["x"], &opts).unwrap();
        assert_eq!(m.iterations, 1);
        assert!(!m.converged);
    }
}
