//! De-biased lasso intervals for the first coefficient over repeated draws.
//!
//! `cargo run --release --example debiased_ci`

use nalgebra::DVector;

use firstorder::cones::lambda_lasso;
use firstorder::diagnostics::debiased_estimate;
use firstorder::loss::LossKind;
use firstorder::model::{generate_design, generate_linear, sigma_star, CovarianceModel, DesignKind, GroundTruth};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, SolverConfig};

fn main() -> firstorder::error::Result<()> {
    let (n, p, s, reps) = (500, 1000, 5, 40);
    let cov = CovarianceModel::identity(p);
    let truth = GroundTruth::sparse(p, s, 1.0)?;
    let mut a = DVector::zeros(p);
    a[0] = 1.0;
    let mut covered = 0;
    for seed in 0..reps {
        let data = generate_linear(generate_design(&cov, n, DesignKind::Gaussian, seed)?, &truth.beta_star, 1.0, seed)?;
        let penalty = PenaltySpec::L1 {
            lambda: lambda_lasso(LossKind::Squared, 1.0, sigma_star(&data)?, 0.1, p, s, n)?,
        };
        let beta = fit_beta_hat(&data, LossKind::Squared, &penalty, &SolverConfig::default())?.solution;
        let report = debiased_estimate(&data, &beta, &cov, &a)?;
        covered += usize::from(report.covered);
        if seed < 5 {
            println!(
                "lasso {:.4}, de-biased {:.4}, interval [{:.4}, {:.4}], target {}",
                beta[0], report.theta_hat, report.ci.0, report.ci.1, report.target
            );
        }
    }
    println!("covered {covered}/{reps}");
    Ok(())
}
