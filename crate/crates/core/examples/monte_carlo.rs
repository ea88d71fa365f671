//! Monte-Carlo study of the cross-fitted PLR estimator against an oracle
//! that knows the true nuisance functions.

use crossfit::folds::mix_seed;
use crossfit::prelude::*;

fn oracle(data: &Dataset, p: &PlrParams) -> f64 {
    let x: Vec<&[f64]> = p.covariates().iter().map(|c| data.column(c).unwrap()).collect();
    let (y, d) = (data.column("y").unwrap(), data.column("d").unwrap());
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..p.n {
        let g: f64 = (0..p.p).map(|j| p.g_coefs[j] * x[j][i]).sum();
        let m = 1.0 / (1.0 + (-(0..p.p).map(|j| p.m_coefs[j] * x[j][i]).sum::<f64>()).exp());
        num += (d[i] - m) * (y[i] - g);
        den += (d[i] - m).powi(2);
    }
    num / den
}

fn summary(xs: &[f64], theta: f64) -> String {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    format!("mean {mean:.4}  bias {:+.4}  sd {sd:.4}", mean - theta)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let (mut cf, mut or) = (Vec::new(), Vec::new());
    for r in 0..reps {
        let params = PlrParams { seed: mix_seed(1, r), ..Default::default() };
        let data = dgp_plr(&params)?;
        let x = params.covariates();
        let method = MethodSpec::builder(plr_target())
            .nuisance("nuis_g", create_nuisance("nuis_g", LinearRegression::ols("y", x.clone()), 4, Vec::<String>::new())?)
            .nuisance("nuis_m", create_nuisance("nuis_m", LogisticRegression::new("d", x), 4, Vec::<String>::new())?)
            .repeats(2)
            .build()?;
        cf.push(crossfit(&data, &method, r)?.value().unwrap());
        or.push(oracle(&data, &params));
    }
    println!("{reps} replications, theta0 = 2");
    println!("cross-fit  {}", summary(&cf, 2.0));
    println!("oracle     {}", summary(&or, 2.0));
    Ok(())
}
