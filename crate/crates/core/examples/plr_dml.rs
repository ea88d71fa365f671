//! Double machine learning for the partially linear model: cross-fitted
//! outcome and propensity regressions plugged into the partialling-out
//! score.

use crossfit::prelude::*;
use crossfit::recipes::plr_estimate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlrParams { n: 2000, seed: 3, ..Default::default() };
    let data = dgp_plr(&params)?;
    let x = params.covariates();

    let nuis_g = create_nuisance("nuis_g", LinearRegression::ols("y", x.clone()), 4, Vec::<String>::new())?;
    let nuis_m = create_nuisance("nuis_m", LogisticRegression::new("d", x.clone()), 4, Vec::<String>::new())?;
    let method = MethodSpec::builder(plr_target())
        .nuisance("nuis_g", nuis_g)
        .nuisance("nuis_m", nuis_m)
        .folds(5)
        .repeats(5)
        .build()?;

    let result = crossfit(&data, &method, 2024)?;
    println!("true theta: {}", params.theta0);
    println!("cross-fitted theta: {:.4}", result.value().unwrap());
    println!("per repetition: {:?}", result.repetition_values());

    // Naive in-sample plug-in for comparison: same learners, no splitting.
    let g = ols_fit(&data, "y", &x)?.predict(&data)?;
    let m = logistic_fit(&data, "d", &x, &LogisticOptions::default())?.predict(&data)?;
    let naive = plr_estimate(data.column("y")?, data.column("d")?, &g, &m)?;
    println!("in-sample plug-in theta: {naive:.4}");
    Ok(())
}
