//! A nuisance DAG: the outcome model uses the propensity prediction as a
//! feature (`nuis_m -> nuis_g`), and the target reads both. Shows how the
//! three allocation modes place the shared node.

use crossfit::prelude::*;
use crossfit::recipes::plr_target_with;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlrParams { n: 1500, seed: 4, ..Default::default() };
    let data = dgp_plr(&params)?;
    let x = params.covariates();

    let nuis_m = create_nuisance("nuis_m", LogisticRegression::new("d", x.clone()), 2, Vec::<String>::new())?;
    let nuis_g = ps_augmented_outcome_nuisance("nuis_g_ps", "y", x, 2)?;

    for alloc in Allocation::ALL {
        let built = MethodSpec::builder(plr_target_with("y", "d", "nuis_g_ps", "nuis_m"))
            .nuisance("nuis_m", nuis_m.clone())
            .nuisance("nuis_g_ps", nuis_g.clone())
            .folds(7)
            .allocation(alloc)
            .build();
        let method = match built {
            Ok(m) => m,
            Err(e) => {
                println!("{alloc}: rejected: {e}");
                continue;
            }
        };
        let r = crossfit(&data, &method, 11)?;
        println!(
            "{alloc:<12} needs K >= {}  theta = {:.4}  nuis_m fits {} hits {}",
            min_folds_required(&method),
            r.value().unwrap(),
            r.node("nuis_m").fit_calls,
            r.node("nuis_m").cache_hits
        );
    }
    Ok(())
}
