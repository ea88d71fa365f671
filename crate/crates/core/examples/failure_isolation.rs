//! A failing learner only takes down its own method. The logistic model is
//! pointed at a continuous column, so every fit errors out.

use crossfit::prelude::*;
use indexmap::IndexMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlrParams { n: 600, seed: 6, ..Default::default() };
    let data = dgp_plr(&params)?;
    let x = params.covariates();
    let g = create_nuisance("nuis_g", LinearRegression::ols("y", x.clone()), 4, Vec::<String>::new())?;
    let good_m = create_nuisance("nuis_m", LogisticRegression::new("d", x.clone()), 4, Vec::<String>::new())?;
    let bad_m = create_nuisance("nuis_m", LogisticRegression::new("y", x), 4, Vec::<String>::new())?;

    let mut methods = IndexMap::new();
    for (name, m) in [("broken", bad_m), ("healthy", good_m)] {
        let spec = MethodSpec::builder(plr_target())
            .nuisance("nuis_g", g.clone())
            .nuisance("nuis_m", m)
            .repeats(3)
            .max_fail(1)
            .build()?;
        methods.insert(name.to_string(), spec);
    }

    for (name, r) in crossfit_multi(&data, &methods, 3)? {
        println!("{name}: estimate {:?}, {} ok / {} failed", r.value(), r.n_success, r.n_fail);
        for e in &r.errors {
            println!("  rep {:?} panel {:?} at {}: {}", e.rep, e.panel, e.location, e.message);
        }
    }
    Ok(())
}
