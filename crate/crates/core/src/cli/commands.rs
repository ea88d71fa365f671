use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use indexmap::IndexMap;
use serde_json::{json, Value};

use super::config::{DataSource, ExperimentConfig};
use super::{CliError, EXIT_INVALID, EXIT_OK, EXIT_PARTIAL};
use crate::engine::{crossfit_multi, RunReport};
use crate::folds::{default_fold_split, min_folds_required, mix_seed, schedule, Window};
use crate::spec::{validate_method, MethodSpec, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleFormat {
    Text,
    Csv,
}

fn resolve_seed(cfg: &ExperimentConfig, cli_seed: Option<u64>) -> u64 {
    cli_seed.or(cfg.seed).unwrap_or(0)
}

fn emit(bytes: &[u8], dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match dest {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => out.write_all(bytes).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn validated(cfg: &ExperimentConfig) -> Result<IndexMap<String, MethodSpec>, CliError> {
    let methods = cfg.build_methods()?;
    for (name, m) in &methods {
        let report = validate_method(m);
        if !report.passed {
            return Err(CliError::Config(format!("method {name:?} is invalid: {report}")));
        }
    }
    Ok(methods)
}

/// Prints a JSON validation report per method; exit 0 iff all are valid.
pub fn cmd_validate(config: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let mut all_ok = !cfg.methods.is_empty();
    let mut report = serde_json::Map::new();
    for mc in &cfg.methods {
        let entry = match mc.build() {
            Ok(m) => {
                let r = validate_method(&m);
                all_ok &= r.passed;
                json!({
                    "passed": r.passed,
                    "violations": r.violations,
                    "min_folds_required": min_folds_required(&m),
                })
            }
            Err(e) => {
                all_ok = false;
                json!({
                    "passed": false,
                    "violations": [{"check": "config", "message": e.to_string()}],
                })
            }
        };
        if report.insert(mc.name.clone(), entry).is_some() {
            all_ok = false;
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(report)).expect("report serializes");
    text.push('\n');
    emit(text.as_bytes(), None, out)?;
    Ok(if all_ok { EXIT_OK } else { EXIT_INVALID })
}

fn fold_list(w: &Window, sep: &str) -> String {
    w.folds().iter().map(usize::to_string).collect::<Vec<_>>().join(sep)
}

/// Prints the panel-by-panel training windows of one method.
pub fn cmd_schedule(
    config: &Path,
    method: &str,
    rep: usize,
    format: ScheduleFormat,
    cli_seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let m = cfg.method(method)?.build()?;
    let report = validate_method(&m);
    if !report.passed {
        return Err(CliError::Config(format!("method {method:?} is invalid: {report}")));
    }
    if rep >= m.repeats() {
        return Err(CliError::Config(format!(
            "--rep {rep} is out of range: method {method:?} has {} repetitions",
            m.repeats()
        )));
    }
    let sched = schedule(&m).map_err(|e| CliError::Config(e.to_string()))?;
    let data = cfg.load_data(None)?;
    let seed = resolve_seed(&cfg, cli_seed);
    let folds = default_fold_split(data.n_rows(), m.folds(), seed, rep).map_err(|e| CliError::Data(e.to_string()))?;
    let labels = sched.instances.labels();

    let mut buf = Vec::new();
    match format {
        ScheduleFormat::Text => {
            let sizes: Vec<String> = folds.sizes().iter().map(usize::to_string).collect();
            let widths: Vec<String> = sched
                .instances
                .instances
                .iter()
                .map(|i| format!("{} (width {})", i.label(), i.train_fold))
                .collect();
            writeln!(
                buf,
                "# method={method} mode={} allocation={} K={} eval_fold={} rep={rep} seed={seed}",
                m.mode(),
                m.allocation(),
                m.folds(),
                m.eval_fold()
            )
            .unwrap();
            writeln!(buf, "# fold sizes {} digest {}", sizes.join(","), folds.digest()).unwrap();
            writeln!(buf, "# instances {}", widths.join(", ")).unwrap();
            for pa in &sched.panels {
                let mut parts = vec![format!("eval:{}", pa.eval_window)];
                parts.extend(labels.iter().zip(&pa.training).map(|(l, w)| format!("{l}:{w}")));
                writeln!(buf, "panel {}: {}", pa.panel, parts.join("; ")).unwrap();
            }
        }
        ScheduleFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["rep", "panel", "instance", "node", "path", "train_folds", "eval_folds"])
                .map_err(|e| CliError::Data(e.to_string()))?;
            for pa in &sched.panels {
                for (inst, win) in sched.instances.instances.iter().zip(&pa.training) {
                    w.write_record([
                        rep.to_string(),
                        pa.panel.to_string(),
                        inst.label(),
                        inst.node.clone(),
                        inst.path.join("/"),
                        fold_list(win, " "),
                        fold_list(&pa.eval_window, " "),
                    ])
                    .map_err(|e| CliError::Data(e.to_string()))?;
                }
            }
            w.flush().map_err(|source| CliError::Io {
                path: "<buffer>".into(),
                source,
            })?;
        }
    }
    emit(&buf, None, out)?;
    Ok(EXIT_OK)
}

/// Runs every method once on the configured data.
pub fn cmd_run(config: &Path, output: Option<&Path>, cli_seed: Option<u64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let methods = validated(&cfg)?;
    let data = cfg.load_data(None)?;
    let results = crossfit_multi(&data, &methods, resolve_seed(&cfg, cli_seed))?;
    let reports: IndexMap<&str, RunReport> = results.iter().map(|(k, r)| (k.as_str(), r.report(&data))).collect();
    let partial = results.values().any(|r| r.n_success == 0);
    let mut text = serde_json::to_string_pretty(&reports).expect("reports serialize");
    text.push('\n');
    emit(text.as_bytes(), output.or(cfg.output.as_deref()), out)?;
    Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Monte-Carlo study: one fresh DGP draw per replication, all methods run
/// on each draw, one CSV row per (replication, method) plus a summary.
pub fn cmd_simulate(
    config: &Path,
    output: Option<&Path>,
    cli_seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let theta0 = match &cfg.data {
        DataSource::Dgp { params, .. } => params.theta0,
        DataSource::Csv { .. } => {
            return Err(CliError::Config("simulate needs a dgp data source".into()));
        }
    };
    if cfg.monte_carlo_reps == 0 {
        return Err(CliError::Config("monte_carlo_reps must be at least 1".into()));
    }
    let methods = validated(&cfg)?;
    if let Some((name, _)) = methods.iter().find(|(_, m)| m.mode() != Mode::Estimate) {
        return Err(CliError::Config(format!("simulate supports estimate-mode methods only; {name:?} is predict-mode")));
    }
    let seed = resolve_seed(&cfg, cli_seed);
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());

    let mut estimates: IndexMap<&str, Vec<f64>> = methods.keys().map(|k| (k.as_str(), Vec::new())).collect();
    let mut partial = false;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "replication",
        "method",
        "estimate",
        "n_success",
        "n_fail",
        "fit_calls",
        "cache_hits",
        "fold_digest",
    ])
    .map_err(csv_err)?;
    for r in 0..cfg.monte_carlo_reps as u64 {
        let data = cfg.load_data(Some(r))?;
        let results = crossfit_multi(&data, &methods, mix_seed(seed, r))?;
        for (name, res) in &results {
            let v = res.value();
            match v {
                Some(x) => estimates[name.as_str()].push(x),
                None => partial = true,
            }
            w.write_record([
                r.to_string(),
                name.clone(),
                fmt_opt(v),
                res.n_success.to_string(),
                res.n_fail.to_string(),
                res.fit_calls.to_string(),
                res.cache_hits.to_string(),
                res.fold_digests.first().cloned().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    let mut buf = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(buf, "#summary,method,n,mean,bias,mc_std").unwrap();
    for (name, xs) in &estimates {
        let n = xs.len();
        let mean = (n > 0).then(|| xs.iter().sum::<f64>() / n as f64);
        let sd = mean.filter(|_| n > 1).map(|mu| {
            (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        writeln!(
            buf,
            "#summary,{name},{n},{},{},{}",
            fmt_opt(mean),
            fmt_opt(mean.map(|m| m - theta0)),
            fmt_opt(sd)
        )
        .unwrap();
    }
    emit(&buf, output.or(cfg.output.as_deref()), out)?;
    Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
}
