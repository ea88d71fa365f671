//! Estimate mode: out-of-sample MSE of a ridge regression, cross-fitted
//! over 5 folds and 3 repetitions.

use crossfit::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlrParams { n: 500, seed: 1, ..Default::default() };
    let data = dgp_plr(&params)?;

    let nuis_y = create_nuisance("nuis_y", LinearRegression::ridge("y", params.covariates(), 0.5), 3, Vec::<String>::new())?;
    let method = MethodSpec::builder(mse_target("y", "nuis_y"))
        .nuisance("nuis_y", nuis_y)
        .folds(5)
        .eval_fold(1)
        .repeats(3)
        .build()?;

    let result = crossfit(&data, &method, 42)?;
    println!("per repetition: {:?}", result.repetition_values());
    println!("median over repetitions: {:.4}", result.value().unwrap());
    println!("fits: {}, cache hits: {}", result.fit_calls, result.cache_hits);
    Ok(())
}
