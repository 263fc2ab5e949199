//! Under an isotropic Gaussian design the lasso error matches the root
//! prox risk of the Gaussian sequence model. The prox risk is computed both
//! by Monte Carlo and by one-dimensional quadrature.
//!
//! `cargo run --release --example exact_risk_identity`

use firstorder::cones::lambda_lasso;
use firstorder::diagnostics::{l1_prox_risk_quadrature, risk_identity_check};
use firstorder::loss::{curvature_matrix, LossKind};
use firstorder::model::{generate_design, generate_linear, sigma_star, CovarianceModel, DesignKind, GroundTruth};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, fit_eta, SolverConfig};

fn main() -> firstorder::error::Result<()> {
    let (n, p, s) = (2000, 1000, 5);
    let cov = CovarianceModel::identity(p);
    let truth = GroundTruth::sparse(p, s, 1.0)?;
    let cfg = SolverConfig::default();
    for seed in 0..5 {
        let data = generate_linear(generate_design(&cov, n, DesignKind::Gaussian, seed)?, &truth.beta_star, 1.0, seed)?;
        let sigma = sigma_star(&data)?;
        let lambda = lambda_lasso(LossKind::Squared, 1.0, sigma, 0.5, p, s, n)?;
        let penalty = PenaltySpec::L1 { lambda };
        let k = curvature_matrix(LossKind::Squared, &cov, &truth.beta_star, DesignKind::Gaussian)?;
        let beta = fit_beta_hat(&data, LossKind::Squared, &penalty, &cfg)?.solution;
        let eta = fit_eta(&data, LossKind::Squared, &k, &truth.beta_star, &penalty, &cfg)?.solution;
        let report = risk_identity_check(&data, &cov, &beta, &eta, &penalty, 5000, seed, 2.0)?;
        let quad = l1_prox_risk_quadrature(lambda, &truth.beta_star, sigma, n).sqrt();
        println!(
            "seed {seed}: ||beta_hat - beta*|| = {:.4}, root prox risk {:.4} (quadrature {quad:.4}), ratio {:.4}, bound holds: {}",
            report.lhs,
            report.rhs,
            report.ratio.unwrap_or(f64::NAN),
            report.bound_holds
        );
    }
    Ok(())
}
