use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;

use super::key::{InstanceKey, ModelCache};
use super::NodeStats;
use crate::folds::{FoldAssignment, InstanceSet, PanelAllocation, Window};
use crate::spec::{Model, NuisancePredictions, NuisanceSpec, Predictions, Predictor, Target};
use crate::tabular::Dataset;
use crate::BoxError;

/// Where and why a panel failed.
#[derive(Debug)]
pub(crate) struct Failure {
    pub location: String,
    pub message: String,
}

impl Failure {
    pub(crate) fn new(location: impl Into<String>, message: impl ToString) -> Self {
        Self {
            location: location.into(),
            message: message.to_string(),
        }
    }
}

/// Everything a panel needs that does not change across panels.
pub(crate) struct Plan {
    pub instances: Arc<InstanceSet>,
    pub specs: Arc<Vec<NuisanceSpec>>,
    pub panels: Vec<PanelAllocation>,
}

pub(crate) enum PanelValue {
    Scalar(f64),
    Predictor(Predictor),
}

/// Fitted models of one panel, in instance order.
struct Fitted {
    instances: Arc<InstanceSet>,
    specs: Arc<Vec<NuisanceSpec>>,
    models: Vec<Model>,
}

impl Fitted {
    /// Predictions of instance `i` on `rows`, computing dependency
    /// predictions on the same rows first. `memo` must belong to `rows`.
    fn predict(&self, i: usize, rows: &Dataset, memo: &mut HashMap<usize, Predictions>) -> Result<Predictions, Failure> {
        if let Some(p) = memo.get(&i) {
            return Ok(p.clone());
        }
        let deps = self.dep_predictions(i, rows, memo)?;
        let inst = &self.instances.instances[i];
        let out = self.specs[i]
            .predict(&self.models[i], rows, &deps)
            .map_err(|e| Failure::new(format!("predict:{}", inst.label()), e))?;
        memo.insert(i, out.clone());
        Ok(out)
    }

    fn dep_predictions(&self, i: usize, rows: &Dataset, memo: &mut HashMap<usize, Predictions>) -> Result<NuisancePredictions, Failure> {
        let mut deps = NuisancePredictions::new();
        for d in &self.instances.instances[i].deps {
            let p = self.predict(d.instance, rows, memo)?;
            deps.insert(d.name.clone(), p);
        }
        Ok(deps)
    }

    fn target_inputs(&self, rows: &Dataset, memo: &mut HashMap<usize, Predictions>) -> Result<NuisancePredictions, Failure> {
        let mut preds = NuisancePredictions::new();
        for r in &self.instances.roots {
            let p = self.predict(r.instance, rows, memo)?;
            preds.insert(r.name.clone(), p);
        }
        Ok(preds)
    }
}

/// Row subset of one window with its prediction memo.
struct Rows {
    data: Dataset,
    memo: HashMap<usize, Predictions>,
}

fn rows_for<'a>(subsets: &'a mut HashMap<Window, Rows>, w: Window, data: &Dataset, folds: &FoldAssignment) -> Result<&'a mut Rows, Failure> {
    match subsets.entry(w) {
        Entry::Occupied(e) => Ok(e.into_mut()),
        Entry::Vacant(e) => {
            let sub = data
                .select_rows(&folds.rows_in(&w))
                .map_err(|e| Failure::new("rows", e))?;
            Ok(e.insert(Rows {
                data: sub,
                memo: HashMap::new(),
            }))
        }
    }
}

pub(crate) struct PanelRun<'a> {
    pub plan: &'a Plan,
    pub target: &'a Target,
    pub data: &'a Dataset,
    pub folds: &'a FoldAssignment,
}

impl PanelRun<'_> {
    /// Fits every instance of panel `p` deps-first, then evaluates the target
    /// (estimate mode) or closes over the fitted models (predict mode).
    pub(crate) fn run(
        &self,
        p: usize,
        cache: &mut ModelCache,
        stats: &mut IndexMap<String, NodeStats>,
    ) -> Result<PanelValue, Failure> {
        let alloc = &self.plan.panels[p];
        let set = &self.plan.instances;
        let mut fitted = Fitted {
            instances: Arc::clone(set),
            specs: Arc::clone(&self.plan.specs),
            models: Vec::with_capacity(set.len()),
        };
        let mut keys: Vec<InstanceKey> = Vec::with_capacity(set.len());
        let mut subsets: HashMap<Window, Rows> = HashMap::new();

        for (i, inst) in set.instances.iter().enumerate() {
            let window = alloc.training[i];
            let spec = &self.plan.specs[i];
            let dep_keys: Vec<(&str, InstanceKey)> = inst
                .deps
                .iter()
                .map(|d| (d.name.as_str(), keys[d.instance]))
                .collect();
            let key = InstanceKey::compute(spec.id(), spec.signature(), &window, &dep_keys);
            let node = stats.entry(inst.node.clone()).or_default();
            node.requests += 1;
            let model = match cache.get(&key) {
                Some(m) => {
                    node.cache_hits += 1;
                    m
                }
                None => {
                    node.fit_calls += 1;
                    let rows = rows_for(&mut subsets, window, self.data, self.folds)?;
                    let deps = fitted.dep_predictions(i, &rows.data, &mut rows.memo)?;
                    let m = spec
                        .fit(&rows.data, &deps)
                        .map_err(|e| Failure::new(format!("fit:{}", inst.label()), e))?;
                    cache.put(key, m.clone());
                    m
                }
            };
            fitted.models.push(model);
            keys.push(key);
        }

        match self.target.mode() {
            crate::spec::Mode::Estimate => {
                let rows = rows_for(&mut subsets, alloc.eval_window, self.data, self.folds)?;
                let preds = fitted.target_inputs(&rows.data, &mut rows.memo)?;
                let v = self
                    .target
                    .eval_estimate(&rows.data, &preds)
                    .map_err(|e| Failure::new("target", e))?;
                if !v.is_finite() {
                    return Err(Failure::new("target", format!("target returned non-finite value {v}")));
                }
                Ok(PanelValue::Scalar(v))
            }
            crate::spec::Mode::Predict => Ok(PanelValue::Predictor(panel_predictor(fitted, self.target.clone()))),
        }
    }
}

fn panel_predictor(fitted: Fitted, target: Target) -> Predictor {
    Predictor::new(move |new: &Dataset| -> Result<Vec<f64>, BoxError> {
        let mut memo = HashMap::new();
        let preds = fitted
            .target_inputs(new, &mut memo)
            .map_err(|f| format!("{}: {}", f.location, f.message))?;
        match target.eval_predict(new, &preds)? {
            Predictions::Numeric(v) => Ok(v),
            Predictions::Tokens(_) => Err("predict-mode target must return numeric predictions".into()),
        }
    })
}
