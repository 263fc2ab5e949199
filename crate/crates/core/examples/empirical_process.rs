//! Pointwise empirical-process quantities, restricted strong convexity and
//! the Taylor remainder at the realized error directions of a logistic lasso.
//!
//! `cargo run --release --example empirical_process`

use firstorder::cones::lambda_lasso;
use firstorder::diagnostics::{process_quantities, rsc_empirical, taylor_remainder};
use firstorder::loss::{curvature_matrix, LossKind};
use firstorder::model::{generate_design, generate_logistic, CovarianceModel, DesignKind, GroundTruth};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, fit_eta, SolverConfig};

fn main() -> firstorder::error::Result<()> {
    let (n, p, s) = (2000, 200, 4);
    let cov = CovarianceModel::identity(p);
    let raw = GroundTruth::sparse(p, s, 1.0)?;
    let beta_star = &raw.beta_star / cov.matrix.norm(&raw.beta_star);
    let data = generate_logistic(generate_design(&cov, n, DesignKind::Gaussian, 5)?, &beta_star, 5)?;
    let loss = LossKind::Logistic;
    let k = curvature_matrix(loss, &cov, &beta_star, DesignKind::Gaussian)?;
    let penalty = PenaltySpec::L1 {
        lambda: lambda_lasso(loss, 1.0, 0.5, 0.5, p, s, n)?,
    };
    let cfg = SolverConfig::default();
    let beta = fit_beta_hat(&data, loss, &penalty, &cfg)?.solution;
    let eta = fit_eta(&data, loss, &k, &beta_star, &penalty, &cfg)?.solution;

    let directions = vec![&beta - &beta_star, &eta - &beta_star, &eta - &beta];
    let q = process_quantities(&data, loss, &k, &beta_star, &directions)?;
    for (name, (q1, z)) in ["beta_hat - beta*", "eta - beta*", "eta - beta_hat"].iter().zip(q.q1.iter().zip(&q.z)) {
        println!("{name:>16}: q1 = {q1:.4}, z = {z:.4}");
    }
    let rsc = rsc_empirical(&data, loss, &k, &beta_star, &directions[0])?;
    println!(
        "restricted strong convexity theta^2 = {:.4} (floor {:.4}), ||u||_K = {:.4}",
        rsc.theta_sq, rsc.curvature_floor, rsc.k_norm
    );
    let taylor = taylor_remainder(&data, loss, &beta, &beta_star)?;
    println!("Taylor remainder max |a_i| = {:.5}, bound violation {:.2e}", taylor.max_abs, taylor.violation);
    Ok(())
}
