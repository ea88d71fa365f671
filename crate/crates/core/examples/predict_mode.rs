//! Predict mode: the result is a predictor, the pointwise mean of the K
//! panel predictors, usable on new data.

use crossfit::prelude::*;

fn main() -> Result<(), BoxError> {
    let params = PlrParams { n: 1000, seed: 2, ..Default::default() };
    let data = dgp_plr(&params)?;

    let nuis_m = create_nuisance("nuis_m", LogisticRegression::new("d", params.covariates()), 4, Vec::<String>::new())?;
    let method = MethodSpec::builder(identity_pred_target("nuis_m"))
        .nuisance("nuis_m", nuis_m)
        .folds(5)
        .eval_fold(0)
        .aggregate_panels(Aggregator::Mean)
        .build()?;
    assert_eq!(method.mode(), Mode::Predict);

    let result = crossfit(&data, &method, 7)?;
    let propensity = result.predictor().expect("predict mode yields a predictor");

    let fresh = dgp_plr(&PlrParams { n: 10, seed: 99, ..params })?;
    for (i, p) in propensity.predict(&fresh)?.iter().take(5).enumerate() {
        println!("row {i}: P(d = 1 | x) = {p:.3}");
    }

    // Median across panels instead of the mean.
    let median = MethodSpec::builder(identity_pred_target("nuis_m"))
        .nuisance("nuis_m", method.nuisances()["nuis_m"].clone())
        .eval_fold(0)
        .aggregate_panels(Aggregator::custom_predictor(|ps| Ok(median_predictor(ps)?)))
        .build()?;
    let r = crossfit(&data, &median, 7)?;
    println!("median-aggregated, row 0: {:.3}", r.predictor().unwrap().predict(&fresh)?[0]);
    Ok(())
}
