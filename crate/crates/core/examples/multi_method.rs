//! Several methods on one dataset. Methods with the same K and repetitions
//! share fold assignments and a model cache, so the common outcome model is
//! fitted once per panel.

use crossfit::prelude::*;
use indexmap::IndexMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlrParams { n: 1000, seed: 5, ..Default::default() };
    let data = dgp_plr(&params)?;
    let x = params.covariates();

    let g = create_nuisance("nuis_g", LinearRegression::ols("y", x.clone()), 4, Vec::<String>::new())?;
    let logit = create_nuisance("nuis_m", LogisticRegression::new("d", x.clone()), 4, Vec::<String>::new())?;
    let lpm = create_nuisance("nuis_m", LinearRegression::ols("d", x.clone()), 4, Vec::<String>::new())?;

    let mut methods = IndexMap::new();
    for (name, m) in [("plr_logit", logit), ("plr_lpm", lpm)] {
        let spec = MethodSpec::builder(plr_target())
            .nuisance("nuis_g", g.clone())
            .nuisance("nuis_m", m)
            .repeats(2)
            .build()?;
        methods.insert(name.to_string(), spec);
    }
    let mse = MethodSpec::builder(mse_target("y", "nuis_g")).nuisance("nuis_g", g).repeats(2).build()?;
    methods.insert("outcome_mse".to_string(), mse);

    for (name, r) in crossfit_multi(&data, &methods, 8)? {
        println!(
            "{name:<12} value {:>8.4}  fits {:>2}  cache hits {:>2}  folds {}",
            r.value().unwrap(),
            r.fit_calls,
            r.cache_hits,
            &r.fold_digests[0][..12]
        );
    }
    Ok(())
}
