use nalgebra::{DMatrix, DVector};

use super::{augment, design, LearnerError};
use crate::spec::{Learner, NuisancePredictions, Predictions};
use crate::tabular::Dataset;
use crate::BoxError;

/// Relative pivot below which the normal equations count as rank deficient.
const RANK_TOL: f64 = 1e-10;
/// Jitter added on rank deficiency, relative to the mean Gram diagonal.
const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub feature_names: Vec<String>,
    /// Set when the fit needed jitter to resolve a singular system.
    pub rank_deficient: bool,
}

impl LinearModel {
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>, LearnerError> {
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
}

pub fn ols_fit<S: AsRef<str>>(data: &Dataset, y: &str, x: &[S]) -> Result<LinearModel, LearnerError> {
    ridge_fit(data, y, x, 0.0)
}

/// Minimizes `‖y − Xβ − b‖² + λ‖β‖²` with the intercept `b` unpenalized.
pub fn ridge_fit<S: AsRef<str>>(
    data: &Dataset,
    y: &str,
    x: &[S],
    lambda: f64,
) -> Result<LinearModel, LearnerError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(LearnerError::NegativeLambda(lambda));
    }
    let (xm, yv) = design(data, y, x)?;
    let n = xm.nrows();
    let p = xm.ncols();
    let y_mean = yv.mean();
    let feature_names: Vec<String> = x.iter().map(|s| s.as_ref().to_string()).collect();
    if p == 0 {
        return Ok(LinearModel {
            coefficients: vec![],
            intercept: y_mean,
            feature_names,
            rank_deficient: false,
        });
    }
    let x_means: DVector<f64> = DVector::from_iterator(p, xm.column_iter().map(|c| c.mean()));
    let mut xc = xm.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_means[j]);
    }
    let yc = yv.add_scalar(-y_mean);
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * &yc;

    let (beta, rank_deficient) = match solve_spd(&gram, &rhs, lambda) {
        Some(b) => (b, false),
        None => {
            let scale = (gram.trace() / p as f64).max(1.0);
            let b = solve_spd(&gram, &rhs, lambda + JITTER * scale).ok_or(LearnerError::Singular)?;
            (b, true)
        }
    };
    let _ = n;
    let intercept = y_mean - x_means.dot(&beta);
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
        intercept,
        feature_names,
        rank_deficient,
    })
}

/// Cholesky solve of `(A + λI) x = b`; `None` when a pivot is not
/// comfortably positive.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let p = a.nrows();
    let mut m = a.clone();
    for i in 0..p {
        m[(i, i)] += lambda;
    }
    let diag: Vec<f64> = (0..p).map(|i| m[(i, i)]).collect();
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    for i in 0..p {
        let pivot = l[(i, i)] * l[(i, i)];
        if !(pivot > RANK_TOL * diag[i].abs()) || !pivot.is_finite() {
            return None;
        }
    }
    Some(chol.solve(b))
}

/// OLS or ridge outcome regression as a nuisance learner.
///
/// `dep_features` names dependency predictions to append as regressors,
/// both when fitting and when predicting.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegression {
    pub target: String,
    pub features: Vec<String>,
    pub dep_features: Vec<String>,
    pub lambda: f64,
}

impl LinearRegression {
    pub fn ols<I, S>(target: impl Into<String>, features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::ridge(target, features, 0.0)
    }

    pub fn ridge<I, S>(target: impl Into<String>, features: I, lambda: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            target: target.into(),
            features: features.into_iter().map(Into::into).collect(),
            dep_features: Vec::new(),
            lambda,
        }
    }

    pub fn with_dep_features<I, S>(mut self, deps: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.dep_features = deps.into_iter().map(Into::into).collect();
        self
    }

    fn all_features(&self) -> Vec<&str> {
        self.features
            .iter()
            .chain(&self.dep_features)
            .map(String::as_str)
            .collect()
    }
}

impl Learner for LinearRegression {
    type Model = LinearModel;

    fn fit(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<LinearModel, BoxError> {
        let data = augment(train, deps, &self.dep_features)?;
        Ok(ridge_fit(&data, &self.target, &self.all_features(), self.lambda)?)
    }

    fn predict(&self, model: &LinearModel, data: &Dataset, deps: &NuisancePredictions) -> Result<Predictions, BoxError> {
        let data = augment(data, deps, &self.dep_features)?;
        Ok(model.predict(&data)?.into())
    }

    fn signature(&self) -> Option<String> {
        Some(format!(
            "linear(y={};x={};deps={};lambda={:?})",
            self.target,
            self.features.join(","),
            self.dep_features.join(","),
            self.lambda
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_columns([
            ("x", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            ("z", vec![0.5, -1.0, 2.0, 0.0, 1.5]),
            ("y", vec![1.2, 1.9, 3.6, 3.9, 5.4]),
        ])
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let d = Dataset::from_columns([("x", vec![1.0, 2.0, 3.0]), ("y", vec![2.0, 4.0, 6.0])]).unwrap();
        let m = ols_fit(&d, "y", &["x"]).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(m.intercept.abs() < 1e-10);
        assert!(!m.rank_deficient);
    }

    #[test]
    fn constant_response() {
        let d = Dataset::from_columns([("x", vec![1.0, 2.0, 7.0]), ("y", vec![5.0; 3])]).unwrap();
        let m = ols_fit(&d, "y", &["x"]).unwrap();
        assert!((m.intercept - 5.0).abs() < 1e-12 && m.coefficients[0].abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_matches_single_column_predictions() {
        let base = toy();
        let dup = base.with_column("x_copy", base.column("x").unwrap().to_vec()).unwrap();
        let single = ols_fit(&base, "y", &["x", "z"]).unwrap();
        let doubled = ols_fit(&dup, "y", &["x", "x_copy", "z"]).unwrap();
        assert!(doubled.rank_deficient);
        let a = single.predict(&base).unwrap();
        let b = doubled.predict(&dup).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6, "{u} vs {v}");
        }
    }

    #[test]
    fn ridge_zero_is_ols_and_large_lambda_shrinks() {
        let d = toy();
        let o = ols_fit(&d, "y", &["x", "z"]).unwrap();
        let r = ridge_fit(&d, "y", &["x", "z"], 0.0).unwrap();
        for (a, b) in o.coefficients.iter().zip(&r.coefficients) {
            assert!((a - b).abs() < 1e-10);
        }
        let big = ridge_fit(&d, "y", &["x", "z"], 1e12).unwrap();
        assert!(big.coefficients.iter().all(|c| c.abs() < 1e-9));
        let y_mean = d.column("y").unwrap().iter().sum::<f64>() / 5.0;
        assert!((big.intercept - y_mean).abs() < 1e-8);
        assert!(matches!(ridge_fit(&d, "y", &["x"], -1.0), Err(LearnerError::NegativeLambda(_))));
    }

    // Independent oracle: Gaussian elimination with partial pivoting on the
    // augmented system over [intercept, x, z], intercept unpenalized.
    fn gauss_oracle(d: &Dataset, lambda: f64) -> Vec<f64> {
        let x = d.column("x").unwrap();
        let z = d.column("z").unwrap();
        let y = d.column("y").unwrap();
        let rows: Vec<[f64; 3]> = (0..d.n_rows()).map(|i| [1.0, x[i], z[i]]).collect();
        let mut a = [[0.0f64; 4]; 3];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] = rows.iter().map(|row| row[r] * row[c]).sum();
            }
            a[r][3] = rows.iter().zip(y).map(|(row, yi)| row[r] * yi).sum();
        }
        a[1][1] += lambda;
        a[2][2] += lambda;
        for col in 0..3 {
            let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            for r in 0..3 {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    let pivot = a[col];
                    for (x, p) in a[r].iter_mut().zip(pivot) {
                        *x -= f * p;
                    }
                }
            }
        }
        (0..3).map(|i| a[i][3] / a[i][i]).collect()
    }

    #[test]
    fn ridge_matches_dense_solve_oracle() {
        let d = toy();
        let expect = gauss_oracle(&d, 1.0);
        let m = ridge_fit(&d, "y", &["x", "z"], 1.0).unwrap();
        assert!((m.intercept - expect[0]).abs() < 1e-8);
        assert!((m.coefficients[0] - expect[1]).abs() < 1e-8);
        assert!((m.coefficients[1] - expect[2]).abs() < 1e-8);
    }

    #[test]
    fn empty_data_rejected() {
        let d = toy().select_rows(&[]).unwrap();
        assert!(matches!(ols_fit(&d, "y", &["x"]), Err(LearnerError::EmptyData)));
    }

    #[test]
    fn dep_features_are_appended() {
        let d = toy();
        let learner = LinearRegression::ols("y", ["x"]).with_dep_features(["nuis_m"]);
        let mut deps = NuisancePredictions::new();
        deps.insert("nuis_m", d.column("z").unwrap().to_vec());
        let m = learner.fit(&d, &deps).unwrap();
        assert_eq!(m.feature_names, ["x", "nuis_m"]);
        let direct = ols_fit(&d, "y", &["x", "z"]).unwrap();
        assert!((m.coefficients[1] - direct.coefficients[1]).abs() < 1e-10);
        assert!(learner.fit(&d, &NuisancePredictions::new()).is_err());
    }
}
