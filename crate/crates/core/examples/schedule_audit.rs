//! Leakage audit with trace learners. Each trace model records the folds it
//! was trained on; the trace target fails the panel if any of those folds
//! shows up among the evaluation rows.

use crossfit::learners::parse_trace;
use crossfit::prelude::*;
use crossfit::recipes::trace_target;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = 6;
    let labels: Vec<usize> = (0..60).map(|i| i % k).collect();
    let data = Dataset::from_columns([("fold", labels.iter().map(|&f| f as f64).collect::<Vec<_>>())])?;

    let nui2 = create_nuisance("nui2", TraceLearner::new("fold"), 2, Vec::<String>::new())?;
    let nui1 = create_nuisance("nui1", TraceLearner::new("fold"), 1, ["nui2"])?;
    let method = MethodSpec::builder(trace_target("fold", ["nui1", "nui2"]))
        .nuisance("nui1", nui1.clone())
        .nuisance("nui2", nui2.clone())
        .folds(k)
        .allocation(Allocation::Independence)
        .fold_split(FoldSplitter::from_labels(labels.clone()))
        .build()?;
    let r = crossfit(&data, &method, 0)?;
    println!("checked {} tokens, {} failed panels", r.value().unwrap(), r.n_fail);

    // Decode the first token each panel sees. The first <nui2:..> is what
    // nui1 saw while fitting, the second what it saw at prediction time.
    let probe = MethodSpec::builder(Target::estimate(["nui1"], |_d, p| {
        let tok = &p.tokens("nui1")?[0];
        let t = parse_trace(tok)?;
        println!("{tok}  trained on {:?}, predicting fold {:?}", t.training(), t.predicted.unwrap());
        Ok(0.0)
    }))
    .nuisance("nui1", nui1)
    .nuisance("nui2", nui2)
    .folds(k)
    .fold_split(FoldSplitter::from_labels(labels))
    .build()?;
    crossfit(&data, &probe, 0)?;
    Ok(())
}
