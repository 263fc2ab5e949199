//! Group lasso and its expansion: nonzero-group counts against the sparsity
//! bound `C̃ s`.
//!
//! `cargo run --release --example group_lasso_sparsity`

use firstorder::cones::{group_cone_constant, lambda_group, phi_lower_bound, ConeSpec};
use firstorder::diagnostics::{sparsity_constant, sparsity_count};
use firstorder::loss::{b3_constant, curvature_matrix, LossKind};
use firstorder::model::{generate_design, generate_linear, sigma_star, CovarianceModel, DesignKind, GroundTruth, GroupStructure};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, fit_eta, SolverConfig};

fn main() -> firstorder::error::Result<()> {
    let (n, m, d, s, xi) = (1000, 200, 4, 5, 0.5);
    let p = m * d;
    let cov = CovarianceModel::identity(p);
    let groups = GroupStructure::contiguous(p, d)?;
    let truth = GroundTruth::group_sparse(groups, s, 1.0)?;
    let k = curvature_matrix(LossKind::Squared, &cov, &truth.beta_star, DesignKind::Gaussian)?;
    let cone = ConeSpec::Group {
        c: group_cone_constant(xi),
        s,
        groups,
    };
    let c_tilde = sparsity_constant(1.0, xi, b3_constant(&cov, &k)?, phi_lower_bound(&cone, &cov)?)?;
    println!("sparsity constant C~ = {c_tilde:.1}, bound C~ s = {:.1}", c_tilde * s as f64);
    for seed in 0..5 {
        let data = generate_linear(generate_design(&cov, n, DesignKind::Gaussian, seed)?, &truth.beta_star, 1.0, seed)?;
        let penalty = PenaltySpec::GroupLasso {
            lambda: lambda_group(1.0, sigma_star(&data)?, xi, d, m, s, n)?,
            groups,
        };
        let cfg = SolverConfig::default();
        let beta = fit_beta_hat(&data, LossKind::Squared, &penalty, &cfg)?.solution;
        let eta = fit_eta(&data, LossKind::Squared, &k, &truth.beta_star, &penalty, &cfg)?.solution;
        let (_, gb) = sparsity_count(&beta, Some(&groups));
        let (_, ge) = sparsity_count(&eta, Some(&groups));
        println!("seed {seed}: nonzero groups beta_hat {gb}, eta {ge}");
    }
    Ok(())
}
