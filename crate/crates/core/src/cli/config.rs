use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::folds::Allocation;
use crate::learners::LearnerConfig;
use crate::recipes::{dgp_plr, PlrParams, TargetConfig};
use crate::spec::{Aggregator, MethodSpec, Mode};
use crate::tabular::{read_csv, Dataset};

fn one() -> usize {
    1
}
fn five() -> usize {
    5
}
fn yes() -> bool {
    true
}
fn plr() -> String {
    "plr".into()
}

/// Declarative experiment: a data source and a list of methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub data: DataSource,
    #[serde(default = "one")]
    pub monte_carlo_reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub methods: Vec<MethodConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default = "yes")]
        header: bool,
    },
    Dgp {
        #[serde(default = "plr")]
        dgp: String,
        #[serde(default)]
        params: PlrParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorName {
    Mean,
    Median,
}

impl From<AggregatorName> for Aggregator {
    fn from(a: AggregatorName) -> Self {
        match a {
            AggregatorName::Mean => Aggregator::Mean,
            AggregatorName::Median => Aggregator::Median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuisanceConfig {
    pub name: String,
    pub learner: LearnerConfig,
    #[serde(default = "one")]
    pub train_fold: usize,
    #[serde(default)]
    pub deps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub target: TargetConfig,
    /// Optional; when given it must agree with the target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub nuisances: Vec<NuisanceConfig>,
    #[serde(default = "five", alias = "K")]
    pub folds: usize,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_fold: Option<usize>,
    #[serde(default)]
    pub allocation: Allocation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate_panels: Option<AggregatorName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate_repeats: Option<AggregatorName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fail: Option<usize>,
}

impl MethodConfig {
    /// Builds the method without validating it.
    pub fn build(&self) -> Result<MethodSpec, CliError> {
        let target = self.target.build();
        if let Some(mode) = self.mode {
            if mode != target.mode() {
                return Err(CliError::Config(format!(
                    "method {:?}: mode {mode} does not match target {:?}, which is {}",
                    self.name,
                    target_name(&self.target),
                    target.mode()
                )));
            }
        }
        let mut b = MethodSpec::builder(target)
            .folds(self.folds)
            .repeats(self.repeats)
            .allocation(self.allocation);
        for n in &self.nuisances {
            let spec = n
                .learner
                .build(&n.name, n.train_fold, n.deps.clone())
                .map_err(|e| CliError::Config(format!("method {:?}: {e}", self.name)))?;
            b = b.nuisance(n.name.clone(), spec);
        }
        if let Some(e) = self.eval_fold {
            b = b.eval_fold(e);
        }
        if let Some(a) = self.aggregate_panels {
            b = b.aggregate_panels(a.into());
        }
        if let Some(a) = self.aggregate_repeats {
            b = b.aggregate_repeats(a.into());
        }
        if let Some(m) = self.max_fail {
            b = b.max_fail(m);
        }
        Ok(b.build_unchecked())
    }
}

fn target_name(t: &TargetConfig) -> &'static str {
    match t {
        TargetConfig::Plr { .. } => "plr",
        TargetConfig::Mse { .. } => "mse",
        TargetConfig::Identity { .. } => "identity",
        TargetConfig::Trace { .. } => "trace",
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text, path)?;
        // Relative CSV paths are taken relative to the config file.
        if let DataSource::Csv { path: csv, .. } = &mut cfg.data {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Methods in declaration order; names must be unique.
    pub fn build_methods(&self) -> Result<IndexMap<String, MethodSpec>, CliError> {
        let mut out = IndexMap::new();
        for m in &self.methods {
            if out.insert(m.name.clone(), m.build()?).is_some() {
                return Err(CliError::Config(format!("duplicate method name {:?}", m.name)));
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("config lists no methods".into()));
        }
        Ok(out)
    }

    pub fn method(&self, name: &str) -> Result<&MethodConfig, CliError> {
        self.methods
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| CliError::UnknownMethod {
                name: name.to_string(),
                available: self.methods.iter().map(|m| m.name.clone()).collect(),
            })
    }

    /// Loads or draws the dataset. `replication` perturbs the DGP seed.
    pub fn load_data(&self, replication: Option<u64>) -> Result<Dataset, CliError> {
        match &self.data {
            DataSource::Csv { path, header } => read_csv(path, *header).map_err(|e| match e {
                crate::tabular::TabularError::Io { path, source } => CliError::Io { path: path.into(), source },
                other => CliError::Data(other.to_string()),
            }),
            DataSource::Dgp { dgp, params } => {
                if dgp != "plr" {
                    return Err(CliError::Config(format!("unknown dgp {dgp:?} (known: plr)")));
                }
                let mut p = params.clone();
                if let Some(r) = replication {
                    p.seed = crate::folds::mix_seed(params.seed, r);
                }
                dgp_plr(&p).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
        "seed": 3,
        "data": {"source": "dgp", "params": {"n": 200}},
        "methods": [{
            "name": "tri",
            "target": {"name": "plr", "nuis_g": "nuis_g_ps"},
            "nuisances": [
                {"name": "nuis_m", "learner": {"kind": "logistic", "y": "d", "x": ["x1", "x2"]}},
                {"name": "nuis_g_ps", "learner": {"kind": "ols", "y": "y", "x": ["x1"], "dep_features": ["nuis_m"]}, "deps": ["nuis_m"]}
            ],
            "K": 5,
            "allocation": "independence"
        }]
    }"#;

    #[test]
    fn parse_serialize_parse_is_identity() {
        let a = ExperimentConfig::from_json(TRIANGLE, Path::new("x.json")).unwrap();
        let b = ExperimentConfig::from_json(&a.to_json(), Path::new("x.json")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.methods[0].folds, 5);
        let methods = a.build_methods().unwrap();
        assert!(crate::spec::validate_method(&methods["tri"]).passed);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ExperimentConfig::from_json("{\n  \"data\": 3\n}", Path::new("bad.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.json") && msg.contains("line 2"), "{msg}");
        let err = ExperimentConfig::from_json(
            r#"{"data":{"source":"dgp"},"methods":[],"bogus":1}"#,
            Path::new("c.json"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn mode_mismatch_rejected() {
        let text = TRIANGLE.replace("\"K\": 5,", "\"K\": 5, \"mode\": \"predict\",");
        let cfg = ExperimentConfig::from_json(&text, Path::new("x.json")).unwrap();
        assert!(matches!(cfg.build_methods(), Err(CliError::Config(_))));
    }
}
