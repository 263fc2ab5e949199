//! Compares the lasso with its first-order expansion as `n` grows at fixed
//! `p/n`: the gap `||eta - beta_hat||` shrinks faster than either error.
//!
//! `cargo run --release --example first_order_expansion`

use firstorder::cones::{lambda_lasso, lasso_rate};
use firstorder::loss::{curvature_matrix, LossKind};
use firstorder::model::{generate_design, generate_linear, sigma_star, CovarianceModel, DesignKind, GroundTruth};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, fit_eta, SolverConfig};

fn main() -> firstorder::error::Result<()> {
    let s = 5;
    let cfg = SolverConfig::default();
    println!("{:>6} {:>8} {:>10} {:>10} {:>10} {:>8}", "n", "r_n", "err_beta", "err_eta", "gap", "ratio");
    for n in [200, 400, 800, 1600] {
        let p = 2 * n;
        let cov = CovarianceModel::identity(p);
        let truth = GroundTruth::sparse(p, s, 1.0)?;
        let data = generate_linear(generate_design(&cov, n, DesignKind::Gaussian, 7)?, &truth.beta_star, 1.0, 7)?;
        let k = curvature_matrix(LossKind::Squared, &cov, &truth.beta_star, DesignKind::Gaussian)?;
        let penalty = PenaltySpec::L1 {
            lambda: lambda_lasso(LossKind::Squared, 1.0, sigma_star(&data)?, 0.5, p, s, n)?,
        };
        let beta = fit_beta_hat(&data, LossKind::Squared, &penalty, &cfg)?.solution;
        let eta = fit_eta(&data, LossKind::Squared, &k, &truth.beta_star, &penalty, &cfg)?.solution;
        let eb = k.norm(&(&beta - &truth.beta_star));
        let ee = k.norm(&(&eta - &truth.beta_star));
        let gap = k.norm(&(&eta - &beta));
        println!(
            "{n:>6} {:>8.4} {eb:>10.4} {ee:>10.4} {gap:>10.5} {:>8.4}",
            lasso_rate(s, p, n),
            gap / (eb + ee)
        );
    }
    Ok(())
}
