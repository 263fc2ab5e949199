//! Fits the lasso at the noise-dominating penalty level and certifies the
//! solution through its KKT residual.
//!
//! `cargo run --release --example lasso_fit`

use firstorder::cones::lambda_lasso;
use firstorder::loss::LossKind;
use firstorder::model::{generate_design, generate_linear, sigma_star, CovarianceModel, DesignKind, GroundTruth};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, smooth_gradient, SolverConfig};

fn main() -> firstorder::error::Result<()> {
    let (n, p, s) = (400, 1000, 5);
    let cov = CovarianceModel::identity(p);
    let truth = GroundTruth::sparse(p, s, 1.0)?;
    let data = generate_linear(generate_design(&cov, n, DesignKind::Gaussian, 1)?, &truth.beta_star, 1.0, 1)?;

    let lambda = lambda_lasso(LossKind::Squared, 1.0, sigma_star(&data)?, 0.5, p, s, n)?;
    let penalty = PenaltySpec::L1 { lambda };
    let fit = fit_beta_hat(&data, LossKind::Squared, &penalty, &SolverConfig::default())?;
    let support: Vec<usize> = (0..p).filter(|&j| fit.solution[j] != 0.0).collect();
    println!("lambda = {lambda:.5}");
    println!(
        "converged = {} after {} iterations, KKT residual {:.2e}",
        fit.converged, fit.iterations, fit.kkt_residual
    );
    println!("estimated support {support:?}");
    println!("error ||beta_hat - beta*|| = {:.4}", (&fit.solution - &truth.beta_star).norm());

    let grad = smooth_gradient(&data, LossKind::Squared, &fit.solution)?;
    println!("recomputed residual {:.2e}", penalty.subdifferential_residual(&fit.solution, &grad)?);
    Ok(())
}
