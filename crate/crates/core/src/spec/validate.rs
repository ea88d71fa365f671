use std::fmt;

use serde::{Deserialize, Serialize};

use super::{MethodSpec, Mode};
use crate::folds::{required_folds, Allocation};
use crate::graph::NuisanceGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Every dependency name resolves to a nuisance of the method.
    Coverage,
    Cycle,
    /// Target arguments match the nuisance map.
    TargetConsistency,
    /// `K`, repetitions, `eval_fold` and per-node `train_fold` bounds.
    FoldConstraint,
    /// Mode-specific requirements (`eval_fold`, aggregators).
    ModeRequirement,
    /// Enough folds for the allocation mode.
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub check: CheckKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, check: CheckKind) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            return f.write_str("ok");
        }
        let msgs: Vec<&str> = self.violations.iter().map(|v| v.message.as_str()).collect();
        f.write_str(&msgs.join("; "))
    }
}

/// Runs every specification check and collects all violations.
pub fn validate_method(m: &MethodSpec) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |check, message: String| out.push(Violation { check, message });
    let k = m.folds;
    let mode = m.mode();

    if k < 2 {
        push(CheckKind::FoldConstraint, format!("K must be at least 2 (got {k})"));
    }
    if m.repeats < 1 {
        push(CheckKind::FoldConstraint, "repeats must be at least 1".into());
    }
    if m.eval_fold >= k {
        push(
            CheckKind::FoldConstraint,
            format!("eval_fold ({}) must be smaller than K ({k})", m.eval_fold),
        );
    }
    if mode == Mode::Estimate && m.eval_fold < 1 {
        push(
            CheckKind::ModeRequirement,
            "estimate mode requires eval_fold ≥ 1".into(),
        );
    }
    for (which, agg) in [("aggregate_panels", &m.aggregate_panels), ("aggregate_repeats", &m.aggregate_repeats)] {
        if !agg.supports(mode) {
            push(
                CheckKind::ModeRequirement,
                format!("{which}: {} cannot be used in {mode} mode", agg.name()),
            );
        }
    }

    let args = m.target.args();
    if args.is_empty() {
        push(
            CheckKind::TargetConsistency,
            "target declares no nuisance arguments".into(),
        );
    }
    for (i, a) in args.iter().enumerate() {
        if args[..i].contains(a) {
            push(
                CheckKind::TargetConsistency,
                format!("target argument {a:?} is declared twice"),
            );
        } else if !m.nuisances.contains_key(a) {
            push(
                CheckKind::TargetConsistency,
                format!("target argument {a:?} has no nuisance mapping"),
            );
        }
    }

    let graph = NuisanceGraph::resolve(&m.nuisances);
    for (node, dep) in &graph.unresolved {
        push(
            CheckKind::Coverage,
            format!("nuisance {node:?} requires {dep:?}, which has no nuisance mapping"),
        );
    }
    let cycles = graph.cycles();
    for c in &cycles {
        push(CheckKind::Cycle, format!("cycle: {}", c.join("→")));
    }
    let root_idx: Vec<usize> = graph.roots(args).into_iter().map(|(_, i)| i).collect();
    let reachable = graph.reachable(&root_idx);
    for (name, _) in &m.nuisances {
        if let Some(i) = graph.node_of(name) {
            if !reachable[i] {
                push(
                    CheckKind::TargetConsistency,
                    format!("nuisance {name:?} is not used by the target or by any dependency"),
                );
            }
        }
    }

    let available = k.saturating_sub(m.eval_fold);
    for node in &graph.nodes {
        let w = node.spec.train_fold();
        if w > available {
            push(
                CheckKind::FoldConstraint,
                format!(
                    "nuisance {:?} has train_fold {w} but only K − eval_fold = {available} folds are available",
                    node.name
                ),
            );
        }
    }

    let structural_ok = graph.unresolved.is_empty() && cycles.is_empty() && m.eval_fold < k;
    if structural_ok && m.allocation != Allocation::Overlap {
        let required = required_folds(&graph, args, m.allocation, m.eval_fold);
        if k < required {
            push(
                CheckKind::Feasibility,
                format!(
                    "{} allocation requires K ≥ {required} (eval_fold + training widths), got K = {k}",
                    m.allocation
                ),
            );
        }
    }

    ValidationReport {
        passed: out.is_empty(),
        violations: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{create_nuisance, learner_fn, Aggregator, NuisancePredictions, NuisanceSpec, SpecError, Target};
    use crate::tabular::Dataset;

    fn node(id: &str, width: usize, deps: &[&str]) -> NuisanceSpec {
        create_nuisance(
            id,
            learner_fn(
                |_d: &Dataset, _p: &NuisancePredictions| Ok(()),
                |_m: &(), d: &Dataset, _p: &NuisancePredictions| Ok(vec![0.0; d.n_rows()].into()),
            ),
            width,
            deps.iter().copied(),
        )
        .unwrap()
    }

    fn target(args: &[&str]) -> Target {
        Target::estimate(args.iter().copied(), |_d, _p| Ok(0.0))
    }

    fn triangle(width: usize, k: usize, alloc: Allocation) -> ValidationReport {
        let m = MethodSpec::builder(target(&["nui1", "nui2"]))
            .nuisance("nui1", node("nui1", width, &["nui2"]))
            .nuisance("nui2", node("nui2", width, &[]))
            .folds(k)
            .eval_fold(1)
            .allocation(alloc)
            .build_unchecked();
        validate_method(&m)
    }

    #[test]
    fn disjoint_two_independent_width_two_k5_is_valid() {
        let m = MethodSpec::builder(target(&["a", "b"]))
            .nuisance("a", node("a", 2, &[]))
            .nuisance("b", node("b", 2, &[]))
            .folds(5)
            .allocation(Allocation::Disjoint)
            .build();
        assert!(m.is_ok());
    }

    #[test]
    fn estimate_mode_needs_eval_window() {
        let err = MethodSpec::builder(target(&["a"]))
            .nuisance("a", node("a", 1, &[]))
            .folds(2)
            .eval_fold(0)
            .build()
            .unwrap_err();
        let SpecError::Invalid(report) = err else { panic!() };
        assert!(report.has(CheckKind::ModeRequirement));
        assert!(report.to_string().contains("estimate mode requires eval_fold ≥ 1"));
    }

    #[test]
    fn missing_dependency_is_named() {
        let m = MethodSpec::builder(target(&["g"]))
            .nuisance("g", node("g", 1, &["nuis_x"]))
            .build_unchecked();
        let r = validate_method(&m);
        assert!(!r.passed && r.has(CheckKind::Coverage));
        assert!(r.to_string().contains("nuis_x"));
    }

    #[test]
    fn cycle_is_reported_with_path() {
        let m = MethodSpec::builder(target(&["A"]))
            .nuisance("A", node("A", 1, &["B"]))
            .nuisance("B", node("B", 1, &["A"]))
            .build_unchecked();
        let r = validate_method(&m);
        assert!(r.has(CheckKind::Cycle));
        assert!(r.violations.iter().any(|v| v.message == "cycle: A→B→A"), "{r}");
    }

    #[test]
    fn triangle_feasibility() {
        let r = triangle(2, 5, Allocation::Independence);
        assert!(r.has(CheckKind::Feasibility));
        assert!(r.to_string().contains("K ≥ 7"), "{r}");
        assert!(triangle(1, 5, Allocation::Independence).passed);
        assert!(!triangle(1, 3, Allocation::Independence).passed);
        assert!(triangle(2, 5, Allocation::Disjoint).passed);
        assert!(triangle(2, 5, Allocation::Overlap).passed);
    }

    #[test]
    fn target_consistency() {
        let m = MethodSpec::builder(target(&["a", "missing"]))
            .nuisance("a", node("a", 1, &[]))
            .nuisance("unused", node("unused", 1, &[]))
            .build_unchecked();
        let r = validate_method(&m);
        let msgs = r.to_string();
        assert!(msgs.contains("\"missing\"") && msgs.contains("\"unused\""), "{msgs}");
    }

    #[test]
    fn width_and_k_bounds() {
        let m = MethodSpec::builder(target(&["a"]))
            .nuisance("a", node("a", 5, &[]))
            .folds(5)
            .build_unchecked();
        assert!(validate_method(&m).has(CheckKind::FoldConstraint));
        let m = MethodSpec::builder(target(&["a"]))
            .nuisance("a", node("a", 1, &[]))
            .folds(1)
            .eval_fold(1)
            .build_unchecked();
        assert!(validate_method(&m).to_string().contains("K must be at least 2"));
    }

    #[test]
    fn mismatched_aggregator_rejected() {
        let m = MethodSpec::builder(target(&["a"]))
            .nuisance("a", node("a", 1, &[]))
            .aggregate_panels(Aggregator::custom_predictor(|ps| Ok(ps[0].clone())))
            .build_unchecked();
        assert!(validate_method(&m).has(CheckKind::ModeRequirement));
    }

    #[test]
    fn aliases_count_once_for_disjoint() {
        let shared = node("m", 2, &[]);
        // two names, one node: disjoint needs 1 + 2 folds, not 1 + 4
        let m = MethodSpec::builder(target(&["m1", "m2"]))
            .nuisance("m1", shared.clone())
            .nuisance("m2", shared)
            .folds(3)
            .allocation(Allocation::Disjoint)
            .build_unchecked();
        assert!(validate_method(&m).passed, "{}", validate_method(&m));
    }

    #[test]
    fn report_serializes() {
        let r = triangle(2, 5, Allocation::Independence);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"check\":\"feasibility\""), "{json}");
    }
}
