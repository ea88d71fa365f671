use std::collections::BTreeSet;

use super::LearnerError;
use crate::spec::{Learner, NuisancePredictions, Predictions};
use crate::tabular::Dataset;
use crate::BoxError;

/// Ignores its inputs and predicts `c` for every row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLearner(pub f64);

impl Learner for ConstantLearner {
    type Model = ();

    fn fit(&self, _train: &Dataset, _deps: &NuisancePredictions) -> Result<(), BoxError> {
        Ok(())
    }

    fn predict(&self, _model: &(), data: &Dataset, _deps: &NuisancePredictions) -> Result<Predictions, BoxError> {
        Ok(vec![self.0; data.n_rows()].into())
    }

    fn signature(&self) -> Option<String> {
        Some(format!("constant({:?})", self.0))
    }
}

/// Leakage probe. Fitting records the fold labels it saw as `T1,2`; each
/// prediction is the model token followed by `|P{fold of the row}`. Traces of
/// dependency predictions are embedded as `<name:...>` both at fit and at
/// predict time, so a target sees every training fold upstream of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLearner {
    pub fold_column: String,
}

impl Default for TraceLearner {
    fn default() -> Self {
        Self::new("fold")
    }
}

impl TraceLearner {
    pub fn new(fold_column: impl Into<String>) -> Self {
        Self {
            fold_column: fold_column.into(),
        }
    }

    fn folds(&self, data: &Dataset) -> Result<Vec<usize>, LearnerError> {
        data.column(&self.fold_column)?
            .iter()
            .enumerate()
            .map(|(row, &v)| {
                if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(LearnerError::BadFoldLabel {
                        column: self.fold_column.clone(),
                        row,
                        value: v,
                    })
                }
            })
            .collect()
    }
}

fn strip_predicted(token: &str) -> &str {
    match token.rfind('|') {
        Some(i) => &token[..i],
        None => token,
    }
}

impl Learner for TraceLearner {
    type Model = String;

    fn fit(&self, train: &Dataset, deps: &NuisancePredictions) -> Result<String, BoxError> {
        let folds: BTreeSet<usize> = self.folds(train)?.into_iter().collect();
        let mut token = format!(
            "T{}",
            folds.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        );
        for (name, _) in deps.iter() {
            let mut seen: Vec<&str> = Vec::new();
            for t in deps.tokens(name)? {
                let t = strip_predicted(t);
                if !seen.contains(&t) {
                    seen.push(t);
                }
            }
            token.push_str(&format!("<{name}:{}>", seen.join("+")));
        }
        Ok(token)
    }

    fn predict(&self, model: &String, data: &Dataset, deps: &NuisancePredictions) -> Result<Predictions, BoxError> {
        let folds = self.folds(data)?;
        let dep_tokens = deps
            .iter()
            .map(|(name, _)| deps.tokens(name).map(|t| (name, t)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(folds
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut t = model.clone();
                for (name, toks) in &dep_tokens {
                    t.push_str(&format!("<{name}:{}>", strip_predicted(&toks[i])));
                }
                t.push_str(&format!("|P{f}"));
                t
            })
            .collect::<Vec<_>>()
            .into())
    }

    fn signature(&self) -> Option<String> {
        Some(format!("trace(fold={})", self.fold_column))
    }
}

/// Parsed trace string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceToken {
    /// Every `T...` fold set in the token, outermost first.
    pub segments: Vec<BTreeSet<usize>>,
    /// Fold label of the predicted row, if the token is a prediction.
    pub predicted: Option<usize>,
}

impl TraceToken {
    /// Union of all training fold sets, upstream ones included.
    pub fn training(&self) -> BTreeSet<usize> {
        self.segments.iter().flatten().copied().collect()
    }
}

pub fn parse_trace(token: &str) -> Result<TraceToken, LearnerError> {
    let bad = || LearnerError::BadTrace(token.to_string());
    let (body, predicted) = match token.rfind('|') {
        Some(i) => {
            let p = token[i + 1..].strip_prefix('P').ok_or_else(bad)?;
            (&token[..i], Some(p.parse::<usize>().map_err(|_| bad())?))
        }
        None => (token, None),
    };
    let bytes = body.as_bytes();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let starts = bytes[i] == b'T' && (i == 0 || matches!(bytes[i - 1], b':' | b'+'));
        if !starts {
            i += 1;
            continue;
        }
        let j = (i + 1..bytes.len())
            .find(|&j| !(bytes[j].is_ascii_digit() || bytes[j] == b','))
            .unwrap_or(bytes.len());
        let set = body[i + 1..j]
            .split(',')
            .map(|s| s.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<BTreeSet<_>, _>>()?;
        segments.push(set);
        i = j;
    }
    if segments.is_empty() {
        return Err(bad());
    }
    Ok(TraceToken { segments, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold_data(folds: &[f64]) -> Dataset {
        Dataset::from_columns([("fold", folds.to_vec())]).unwrap()
    }

    #[test]
    fn constant_learner_shapes() {
        let c = ConstantLearner(7.0);
        let d = fold_data(&[0.0, 1.0, 2.0, 3.0]);
        let p = c.predict(&(), &d, &NuisancePredictions::new()).unwrap();
        assert_eq!(p.as_numeric().unwrap(), [7.0; 4]);
        let empty = d.select_rows(&[]).unwrap();
        assert!(c.predict(&(), &empty, &NuisancePredictions::new()).unwrap().is_empty());
    }

    #[test]
    fn trace_basic_token() {
        let t = TraceLearner::default();
        let deps = NuisancePredictions::new();
        let model = t.fit(&fold_data(&[1.0, 2.0, 2.0, 1.0]), &deps).unwrap();
        assert_eq!(model, "T1,2");
        let p = t.predict(&model, &fold_data(&[0.0, 0.0]), &deps).unwrap();
        assert_eq!(p.as_tokens().unwrap(), ["T1,2|P0", "T1,2|P0"]);
    }

    #[test]
    fn chain_embeds_upstream_folds() {
        let t = TraceLearner::default();
        let b = t.fit(&fold_data(&[3.0]), &NuisancePredictions::new()).unwrap();
        let train = fold_data(&[1.0, 2.0]);
        let b_on_train = t.predict(&b, &train, &NuisancePredictions::new()).unwrap();
        let deps: NuisancePredictions = [("B", b_on_train)].into_iter().collect();
        let a = t.fit(&train, &deps).unwrap();
        assert_eq!(a, "T1,2<B:T3>");
        let eval = fold_data(&[0.0]);
        let b_on_eval = t.predict(&b, &eval, &NuisancePredictions::new()).unwrap();
        let deps: NuisancePredictions = [("B", b_on_eval)].into_iter().collect();
        let tok = t.predict(&a, &eval, &deps).unwrap().as_tokens().unwrap()[0].clone();
        assert_eq!(tok, "T1,2<B:T3><B:T3>|P0");
        let parsed = parse_trace(&tok).unwrap();
        assert_eq!(parsed.predicted, Some(0));
        assert_eq!(parsed.training(), BTreeSet::from([1, 2, 3]));
    }

    #[test]
    fn missing_fold_column_is_an_error() {
        let t = TraceLearner::new("nope");
        assert!(t.fit(&fold_data(&[0.0]), &NuisancePredictions::new()).is_err());
        assert!(TraceLearner::default().fit(&fold_data(&[0.5]), &NuisancePredictions::new()).is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_trace("hello").is_err());
        assert!(parse_trace("T1|X").is_err());
        assert_eq!(parse_trace("T4,0").unwrap().predicted, None);
    }
}
