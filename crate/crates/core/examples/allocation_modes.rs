//! Prints panel 0 of each allocation mode for a diamond-shaped DAG
//! (A <- B, A <- C, B <- D, C <- D) and the smallest K each one accepts.

use crossfit::folds::schedule;
use crossfit::prelude::*;

fn node(id: &str, width: usize, deps: &[&str]) -> NuisanceSpec {
    create_nuisance(id, ConstantLearner(0.0), width, deps.iter().copied()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for alloc in Allocation::ALL {
        let builder = MethodSpec::builder(Target::estimate(["A"], |_d, _p| Ok(0.0)))
            .nuisance("A", node("A", 1, &["B", "C"]))
            .nuisance("B", node("B", 1, &["D"]))
            .nuisance("C", node("C", 1, &["D"]))
            .nuisance("D", node("D", 1, &[]))
            .allocation(alloc);
        let probe = builder.clone().folds(64).build()?;
        let k = min_folds_required(&probe).max(2);
        let method = builder.folds(k).build()?;
        let sched = schedule(&method)?;
        let panel = &sched.panels[0];
        let windows: Vec<String> = sched
            .instances
            .labels()
            .iter()
            .zip(&panel.training)
            .map(|(l, w)| format!("{l}:{w}"))
            .collect();
        println!("{alloc:<12} K={k}  eval:{}  {}", panel.eval_window, windows.join("  "));
    }
    Ok(())
}
