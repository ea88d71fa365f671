use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::Mode;
use crate::tabular::Dataset;
use crate::{guarded, BoxError};

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("cannot aggregate an empty list")]
    Empty,
    #[error("cannot aggregate non-finite value {0}")]
    NonFinite(f64),
    #[error("component predictors returned {found} values, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

pub fn mean_estimate(xs: &[f64]) -> Result<f64, AggregateError> {
    check_finite(xs)?;
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Median; even-length lists average the two middle order statistics.
pub fn median_estimate(xs: &[f64]) -> Result<f64, AggregateError> {
    check_finite(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

fn check_finite(xs: &[f64]) -> Result<(), AggregateError> {
    if xs.is_empty() {
        return Err(AggregateError::Empty);
    }
    match xs.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(AggregateError::NonFinite(v)),
        None => Ok(()),
    }
}

type PredictFn = dyn Fn(&Dataset) -> Result<Vec<f64>, BoxError> + Send + Sync;

/// A cross-fitted prediction function for new data.
#[derive(Clone)]
pub struct Predictor(Arc<PredictFn>);

impl fmt::Debug for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Predictor")
    }
}

impl Predictor {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&Dataset) -> Result<Vec<f64>, BoxError> + Send + Sync + 'static,
    {
        Self(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |d| Ok(vec![c; d.n_rows()]))
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>, BoxError> {
        let out = guarded(|| (self.0)(data))?;
        if out.len() != data.n_rows() {
            return Err(format!("predictor returned {} values for {} rows", out.len(), data.n_rows()).into());
        }
        Ok(out)
    }
}

fn component_outputs(ps: &[Predictor], data: &Dataset) -> Result<Vec<Vec<f64>>, BoxError> {
    let outs = ps.iter().map(|p| p.predict(data)).collect::<Result<Vec<_>, _>>()?;
    let expected = data.n_rows();
    if let Some(bad) = outs.iter().find(|o| o.len() != expected) {
        return Err(AggregateError::LengthMismatch {
            expected,
            found: bad.len(),
        }
        .into());
    }
    Ok(outs)
}

/// Pointwise mean of the component predictors (summed in input order).
pub fn mean_predictor(ps: Vec<Predictor>) -> Result<Predictor, AggregateError> {
    if ps.is_empty() {
        return Err(AggregateError::Empty);
    }
    Ok(Predictor::new(move |data| {
        let outs = component_outputs(&ps, data)?;
        let k = outs.len() as f64;
        Ok((0..data.n_rows())
            .map(|i| outs.iter().map(|o| o[i]).sum::<f64>() / k)
            .collect())
    }))
}

/// Pointwise median of the component predictors.
pub fn median_predictor(ps: Vec<Predictor>) -> Result<Predictor, AggregateError> {
    if ps.is_empty() {
        return Err(AggregateError::Empty);
    }
    Ok(Predictor::new(move |data| {
        let outs = component_outputs(&ps, data)?;
        (0..data.n_rows())
            .map(|i| {
                let column: Vec<f64> = outs.iter().map(|o| o[i]).collect();
                median_estimate(&column).map_err(BoxError::from)
            })
            .collect()
    }))
}

type EstimateAggFn = dyn Fn(&[f64]) -> Result<f64, BoxError> + Send + Sync;
type PredictorAggFn = dyn Fn(Vec<Predictor>) -> Result<Predictor, BoxError> + Send + Sync;

/// Panel or repetition aggregation rule.
///
/// `Mean` and `Median` work in both modes (scalar or pointwise). Custom
/// aggregators are mode-specific. Predictor aggregators receive panel
/// predictors in panel order.
#[derive(Clone)]
pub enum Aggregator {
    Mean,
    Median,
    Estimate(Arc<EstimateAggFn>),
    Predictor(Arc<PredictorAggFn>),
}

impl fmt::Debug for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Aggregator {
    pub fn custom_estimate<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, BoxError> + Send + Sync + 'static,
    {
        Aggregator::Estimate(Arc::new(f))
    }

    pub fn custom_predictor<F>(f: F) -> Self
    where
        F: Fn(Vec<Predictor>) -> Result<Predictor, BoxError> + Send + Sync + 'static,
    {
        Aggregator::Predictor(Arc::new(f))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Median => "median",
            Aggregator::Estimate(_) => "custom estimate aggregator",
            Aggregator::Predictor(_) => "custom predictor aggregator",
        }
    }

    pub fn supports(&self, mode: Mode) -> bool {
        !matches!(
            (self, mode),
            (Aggregator::Estimate(_), Mode::Predict) | (Aggregator::Predictor(_), Mode::Estimate)
        )
    }

    pub(crate) fn estimates(&self, xs: &[f64]) -> Result<f64, BoxError> {
        match self {
            Aggregator::Mean => Ok(mean_estimate(xs)?),
            Aggregator::Median => Ok(median_estimate(xs)?),
            Aggregator::Estimate(f) => guarded(|| f(xs)),
            Aggregator::Predictor(_) => Err("predictor aggregator used on scalar estimates".into()),
        }
    }

    pub(crate) fn predictors(&self, ps: Vec<Predictor>) -> Result<Predictor, BoxError> {
        match self {
            Aggregator::Mean => Ok(mean_predictor(ps)?),
            Aggregator::Median => Ok(median_predictor(ps)?),
            Aggregator::Predictor(f) => guarded(|| f(ps)),
            Aggregator::Estimate(_) => Err("scalar aggregator used on predictors".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_aggregators() {
        assert_eq!(mean_estimate(&[1.0, 2.0, 3.0]), Ok(2.0));
        assert_eq!(median_estimate(&[3.0, 1.0, 2.0]), Ok(2.0));
        assert_eq!(median_estimate(&[1.0, 2.0, 3.0, 4.0]), Ok(2.5));
        assert_eq!(mean_estimate(&[]), Err(AggregateError::Empty));
        assert_eq!(median_estimate(&[]), Err(AggregateError::Empty));
        assert!(matches!(mean_estimate(&[1.0, f64::NAN]), Err(AggregateError::NonFinite(_))));
    }

    fn rows(n: usize) -> Dataset {
        Dataset::from_columns([("x", (0..n).map(|i| i as f64).collect::<Vec<_>>())]).unwrap()
    }

    #[test]
    fn predictor_aggregators() {
        let d = rows(4);
        let mean = mean_predictor(vec![Predictor::constant(1.0), Predictor::constant(3.0)]).unwrap();
        assert_eq!(mean.predict(&d).unwrap(), vec![2.0; 4]);
        let med = median_predictor(vec![
            Predictor::constant(1.0),
            Predictor::constant(3.0),
            Predictor::constant(100.0),
        ])
        .unwrap();
        assert_eq!(med.predict(&d).unwrap(), vec![3.0; 4]);
        let x2 = Predictor::new(|d| Ok(d.column("x")?.iter().map(|v| v * 2.0).collect()));
        let single = mean_predictor(vec![x2.clone()]).unwrap();
        assert_eq!(single.predict(&d).unwrap(), x2.predict(&d).unwrap());
        assert!(mean_predictor(vec![]).is_err());
    }

    #[test]
    fn mismatched_component_length_fails() {
        let bad = Predictor::new(|_| Ok(vec![1.0]));
        let agg = mean_predictor(vec![Predictor::constant(1.0), bad]).unwrap();
        assert!(agg.predict(&rows(3)).is_err());
    }

    #[test]
    fn custom_aggregators_are_mode_specific() {
        let sum = Aggregator::custom_estimate(|xs| Ok(xs.iter().sum()));
        assert!(sum.supports(Mode::Estimate) && !sum.supports(Mode::Predict));
        assert_eq!(sum.estimates(&[1.0, 2.0]).unwrap(), 3.0);
        assert!(sum.predictors(vec![Predictor::constant(1.0)]).is_err());
        assert!(Aggregator::Median.supports(Mode::Predict));
    }

    proptest! {
        #[test]
        fn aggregators_permutation_invariant(
            xs in proptest::collection::vec(-1e3f64..1e3, 1..12),
            seed in any::<u64>(),
        ) {
            let mut ys = xs.clone();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..ys.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ys.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(median_estimate(&xs).unwrap(), median_estimate(&ys).unwrap());
            let (a, b) = (mean_estimate(&xs).unwrap(), mean_estimate(&ys).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn mean_predictor_is_elementwise_mean(cs in proptest::collection::vec(-50f64..50.0, 1..6)) {
            let d = rows(5);
            let ps: Vec<Predictor> = cs.iter().map(|&c| {
                Predictor::new(move |d| Ok(d.column("x")?.iter().map(|x| c * x + c).collect()))
            }).collect();
            let outs: Vec<Vec<f64>> = ps.iter().map(|p| p.predict(&d).unwrap()).collect();
            let expect: Vec<f64> = (0..5)
                .map(|i| outs.iter().map(|o| o[i]).sum::<f64>() / outs.len() as f64)
                .collect();
            prop_assert_eq!(mean_predictor(ps).unwrap().predict(&d).unwrap(), expect);
        }
    }
}
