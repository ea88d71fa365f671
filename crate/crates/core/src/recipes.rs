//! Ready-made targets, nuisances and a synthetic partially linear DGP.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{parse_trace, LinearRegression};
use crate::spec::{create_nuisance, Mode, NuisanceSpec, SpecError, Target};
use crate::tabular::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum RecipeError {
    #[error("residualized treatment has zero variance (sum of squares is 0)")]
    DegenerateTreatment,
    #[error("no evaluation rows")]
    NoRows,
    #[error("{what} has {found} values, expected {expected}")]
    LengthMismatch { what: String, expected: usize, found: usize },
    #[error("invalid DGP parameters: {0}")]
    InvalidParams(String),
    #[error("leakage: {0}")]
    Leakage(String),
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<(), RecipeError> {
    if v.len() != n {
        return Err(RecipeError::LengthMismatch {
            what: what.to_string(),
            expected: n,
            found: v.len(),
        });
    }
    Ok(())
}

/// Partialling-out ratio `Σ D̃Ỹ / Σ D̃²` with `Ỹ = y − ĝ`, `D̃ = d − m̂`.
pub fn plr_estimate(y: &[f64], d: &[f64], g_hat: &[f64], m_hat: &[f64]) -> Result<f64, RecipeError> {
    let n = y.len();
    check_len("d", d, n)?;
    check_len("nuis_g", g_hat, n)?;
    check_len("nuis_m", m_hat, n)?;
    if n == 0 {
        return Err(RecipeError::NoRows);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let dt = d[i] - m_hat[i];
        num += dt * (y[i] - g_hat[i]);
        den += dt * dt;
    }
    if den == 0.0 {
        return Err(RecipeError::DegenerateTreatment);
    }
    Ok(num / den)
}

/// PLR target over columns `y`, `d` and nuisances `nuis_g`, `nuis_m`.
pub fn plr_target() -> Target {
    plr_target_with("y", "d", "nuis_g", "nuis_m")
}

pub fn plr_target_with(y: &str, d: &str, g_arg: &str, m_arg: &str) -> Target {
    let (y, d, g, m) = (y.to_string(), d.to_string(), g_arg.to_string(), m_arg.to_string());
    Target::estimate([g.clone(), m.clone()], move |data, preds| {
        Ok(plr_estimate(
            data.column(&y)?,
            data.column(&d)?,
            preds.numeric(&g)?,
            preds.numeric(&m)?,
        )?)
    })
}

/// Mean squared residual of column `y_col` against nuisance `arg`.
pub fn mse_target(y_col: &str, arg: &str) -> Target {
    let (y, a) = (y_col.to_string(), arg.to_string());
    Target::estimate([a.clone()], move |data, preds| {
        let yv = data.column(&y)?;
        let p = preds.numeric(&a)?;
        check_len(&a, p, yv.len())?;
        if yv.is_empty() {
            return Err(RecipeError::NoRows.into());
        }
        Ok(yv.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / yv.len() as f64)
    })
}

/// Predict-mode target returning the nuisance predictions unchanged.
pub fn identity_pred_target(arg: &str) -> Target {
    let a = arg.to_string();
    Target::predict([a.clone()], move |_data, preds| Ok(preds.get(&a)?.clone()))
}

/// Outcome regression that also uses the `nuis_m` propensity prediction as
/// a regressor, creating the edge `nuis_m -> id`.
pub fn ps_augmented_outcome_nuisance<S: Into<String>>(
    id: &str,
    y: &str,
    x: impl IntoIterator<Item = S>,
    train_fold: usize,
) -> Result<NuisanceSpec, SpecError> {
    create_nuisance(
        id,
        LinearRegression::ols(y, x).with_dep_features(["nuis_m"]),
        train_fold,
        ["nuis_m"],
    )
}

/// Estimate-mode probe for trace learners: every token reaching the target
/// must predict the fold of its row and must not have been trained on any
/// fold present in the evaluation rows. Returns the number of tokens checked.
pub fn trace_target<I, S>(fold_column: &str, args: I) -> Target
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let col = fold_column.to_string();
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let names = args.clone();
    Target::estimate(args, move |data, preds| {
        let folds: Vec<usize> = data.column(&col)?.iter().map(|&f| f as usize).collect();
        let eval: BTreeSet<usize> = folds.iter().copied().collect();
        let mut checked = 0usize;
        for name in &names {
            for (row, tok) in preds.tokens(name)?.iter().enumerate() {
                let t = parse_trace(tok)?;
                if t.predicted != Some(folds[row]) {
                    return Err(RecipeError::Leakage(format!(
                        "{name} row {row}: token {tok:?} does not predict fold {}",
                        folds[row]
                    ))
                    .into());
                }
                let overlap: Vec<usize> = t.training().intersection(&eval).copied().collect();
                if !overlap.is_empty() {
                    return Err(RecipeError::Leakage(format!(
                        "{name} row {row}: token {tok:?} was trained on evaluation folds {overlap:?}"
                    ))
                    .into());
                }
                checked += 1;
            }
        }
        Ok(checked as f64)
    })
}

/// Parameters of `Y = θ0·D + X·g + U`, `D ~ Bernoulli(σ(X·m))`,
/// `X ~ N(0, I_p)`, `U ~ N(0, noise_sd²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlrParams {
    pub theta0: f64,
    pub g_coefs: Vec<f64>,
    pub m_coefs: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for PlrParams {
    fn default() -> Self {
        Self {
            theta0: 2.0,
            g_coefs: vec![1.0, 0.5, 0.0, 0.0, -1.0],
            m_coefs: vec![0.8, 0.0, -0.8, 0.0, 0.0],
            n: 2000,
            p: 5,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

impl PlrParams {
    pub fn validate(&self) -> Result<(), RecipeError> {
        let bad = |m: String| Err(RecipeError::InvalidParams(m));
        if self.p < 1 {
            return bad("p must be at least 1".into());
        }
        if self.n < 10 {
            return bad(format!("n must be at least 10, got {}", self.n));
        }
        if self.g_coefs.len() != self.p || self.m_coefs.len() != self.p {
            return bad(format!(
                "g_coefs and m_coefs need p = {} entries, got {} and {}",
                self.p,
                self.g_coefs.len(),
                self.m_coefs.len()
            ));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad(format!("noise_sd must be non-negative, got {}", self.noise_sd));
        }
        let all = self.g_coefs.iter().chain(&self.m_coefs).chain([&self.theta0]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        Ok(())
    }

    /// Covariate column names `x1..xp`.
    pub fn covariates(&self) -> Vec<String> {
        (1..=self.p).map(|j| format!("x{j}")).collect()
    }
}

/// Draws a dataset with columns `y`, `d`, `x1..xp`.
pub fn dgp_plr(params: &PlrParams) -> Result<Dataset, RecipeError> {
    params.validate()?;
    let (n, p) = (params.n, params.p);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut x = vec![vec![0.0; n]; p];
    let mut y = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        for col in x.iter_mut() {
            col[i] = rng.sample(StandardNormal);
        }
        let index: f64 = (0..p).map(|j| x[j][i] * params.m_coefs[j]).sum();
        let prob = 1.0 / (1.0 + (-index).exp());
        d[i] = if rng.random::<f64>() < prob { 1.0 } else { 0.0 };
        let u: f64 = rng.sample(StandardNormal);
        let g: f64 = (0..p).map(|j| x[j][i] * params.g_coefs[j]).sum();
        y[i] = params.theta0 * d[i] + g + params.noise_sd * u;
    }
    let mut columns = vec![("y".to_string(), y), ("d".to_string(), d)];
    columns.extend(params.covariates().into_iter().zip(x));
    Dataset::from_columns(columns).map_err(|e| RecipeError::InvalidParams(e.to_string()))
}

/// Registry of targets usable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetConfig {
    Plr {
        #[serde(default = "default_y")]
        y: String,
        #[serde(default = "default_d")]
        d: String,
        #[serde(default = "default_g")]
        nuis_g: String,
        #[serde(default = "default_m")]
        nuis_m: String,
    },
    Mse {
        #[serde(default = "default_y")]
        y: String,
        arg: String,
    },
    Identity {
        arg: String,
    },
    Trace {
        #[serde(default = "default_fold")]
        fold_column: String,
        args: Vec<String>,
    },
}

fn default_y() -> String {
    "y".into()
}
fn default_d() -> String {
    "d".into()
}
fn default_g() -> String {
    "nuis_g".into()
}
fn default_m() -> String {
    "nuis_m".into()
}
fn default_fold() -> String {
    "fold".into()
}

impl TargetConfig {
    pub const NAMES: [&'static str; 4] = ["plr", "mse", "identity", "trace"];

    pub fn mode(&self) -> Mode {
        match self {
            TargetConfig::Identity { .. } => Mode::Predict,
            _ => Mode::Estimate,
        }
    }

    pub fn build(&self) -> Target {
        match self {
            TargetConfig::Plr { y, d, nuis_g, nuis_m } => plr_target_with(y, d, nuis_g, nuis_m),
            TargetConfig::Mse { y, arg } => mse_target(y, arg),
            TargetConfig::Identity { arg } => identity_pred_target(arg),
            TargetConfig::Trace { fold_column, args } => trace_target(fold_column, args.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::NuisancePredictions;

    #[test]
    fn plr_hand_examples() {
        let y = [2.0, 0.0, 4.0];
        let d = [1.0, 0.0, 2.0];
        assert_eq!(plr_estimate(&y, &d, &[0.0; 3], &[0.0; 3]).unwrap(), 2.0);
        assert_eq!(plr_estimate(&y, &d, &y, &[0.0; 3]).unwrap(), 0.0);
        assert_eq!(plr_estimate(&y, &d, &[0.0; 3], &d), Err(RecipeError::DegenerateTreatment));
    }

    #[test]
    fn plr_constant_shift_invariance_and_slope_oracle() {
        let y = [1.3, -0.2, 2.2, 0.7, 3.1];
        let d = [1.0, 0.0, 1.0, 0.0, 1.0];
        let g = [0.4, 0.1, 0.9, -0.3, 1.2];
        let m = [0.6, 0.3, 0.7, 0.2, 0.5];
        let base = plr_estimate(&y, &d, &g, &m).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let gs: Vec<f64> = g.iter().map(|v| v + 10.0).collect();
        assert!((plr_estimate(&ys, &d, &gs, &m).unwrap() - base).abs() < 1e-12);
        // through-origin slope of Ỹ on D̃, written out longhand
        let yt: Vec<f64> = (0..5).map(|i| y[i] - g[i]).collect();
        let dt: Vec<f64> = (0..5).map(|i| d[i] - m[i]).collect();
        let slope = yt.iter().zip(&dt).map(|(a, b)| a * b).sum::<f64>() / dt.iter().map(|b| b * b).sum::<f64>();
        assert!((base - slope).abs() < 1e-12);
    }

    #[test]
    fn mse_cases() {
        let t = mse_target("y", "nuis_y");
        let d = Dataset::from_columns([("y", vec![0.0, 2.0])]).unwrap();
        let p: NuisancePredictions = [("nuis_y", vec![1.0, 1.0])].into_iter().collect();
        assert_eq!(t.eval_estimate(&d, &p).unwrap(), 1.0);
        let exact: NuisancePredictions = [("nuis_y", vec![0.0, 2.0])].into_iter().collect();
        assert_eq!(t.eval_estimate(&d, &exact).unwrap(), 0.0);
        let empty = d.select_rows(&[]).unwrap();
        let none: NuisancePredictions = [("nuis_y", Vec::<f64>::new())].into_iter().collect();
        assert!(t.eval_estimate(&empty, &none).is_err());
    }

    #[test]
    fn identity_passes_through() {
        let t = identity_pred_target("nuis");
        assert_eq!(t.mode(), Mode::Predict);
        let d = Dataset::from_columns([("x", vec![0.0, 1.0])]).unwrap();
        let p: NuisancePredictions = [("nuis", vec![0.2, 0.7])].into_iter().collect();
        assert_eq!(t.eval_predict(&d, &p).unwrap().as_numeric().unwrap(), [0.2, 0.7]);
    }

    #[test]
    fn dgp_degenerate_and_reproducible() {
        let zero = PlrParams {
            theta0: 0.0,
            g_coefs: vec![0.0; 5],
            noise_sd: 0.0,
            n: 50,
            ..Default::default()
        };
        let d = dgp_plr(&zero).unwrap();
        assert!(d.column("y").unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(d.column_names().collect::<Vec<_>>(), ["y", "d", "x1", "x2", "x3", "x4", "x5"]);
        let p = PlrParams { n: 100, seed: 4, ..Default::default() };
        assert_eq!(dgp_plr(&p).unwrap(), dgp_plr(&p).unwrap());
        assert!(dgp_plr(&PlrParams { n: 5, ..Default::default() }).is_err());
        assert!(dgp_plr(&PlrParams { p: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn dgp_balanced_treatment_without_confounding() {
        let n = 4000;
        let p = PlrParams {
            n,
            m_coefs: vec![0.0; 5],
            seed: 11,
            ..Default::default()
        };
        let d = dgp_plr(&p).unwrap();
        let mean = d.column("d").unwrap().iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn dgp_oracle_recovers_theta() {
        let p = PlrParams { n: 2000, seed: 3, ..Default::default() };
        let data = dgp_plr(&p).unwrap();
        let x: Vec<&[f64]> = p.covariates().iter().map(|c| data.column(c).unwrap()).collect();
        let g: Vec<f64> = (0..p.n).map(|i| (0..5).map(|j| x[j][i] * p.g_coefs[j]).sum()).collect();
        let m: Vec<f64> = (0..p.n)
            .map(|i| 1.0 / (1.0 + (-(0..5).map(|j| x[j][i] * p.m_coefs[j]).sum::<f64>()).exp()))
            .collect();
        let est = plr_estimate(data.column("y").unwrap(), data.column("d").unwrap(), &g, &m).unwrap();
        assert!((est - 2.0).abs() <= 4.0 * p.noise_sd / (p.n as f64).sqrt(), "{est}");
    }

    #[test]
    fn ps_augmented_with_constant_dep_matches_plain_fit() {
        use crate::learners::ols_fit;
        let data = dgp_plr(&PlrParams { n: 60, seed: 8, ..Default::default() }).unwrap();
        let x = ["x1", "x2"];
        let spec = ps_augmented_outcome_nuisance("nuis_g_ps", "y", x, 1).unwrap();
        assert_eq!(spec.deps(), ["nuis_m"]);
        let deps: NuisancePredictions = [("nuis_m", vec![0.4; 60])].into_iter().collect();
        let model = spec.fit(&data, &deps).unwrap();
        let augmented = spec.predict(&model, &data, &deps).unwrap();
        let plain = ols_fit(&data, "y", &x).unwrap().predict(&data).unwrap();
        for (a, b) in augmented.as_numeric().unwrap().iter().zip(&plain) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(spec.fit(&data, &NuisancePredictions::new()).is_err());
    }

    #[test]
    fn target_registry_round_trip() {
        let cfg: TargetConfig = serde_json::from_str(r#"{"name":"plr"}"#).unwrap();
        assert_eq!(cfg.build().args(), ["nuis_g", "nuis_m"]);
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<TargetConfig>(&s).unwrap(), cfg);
        let id: TargetConfig = serde_json::from_str(r#"{"name":"identity","arg":"nuis_m"}"#).unwrap();
        assert_eq!(id.mode(), Mode::Predict);
        assert!(serde_json::from_str::<TargetConfig>(r#"{"name":"lasso"}"#).is_err());
    }
}
