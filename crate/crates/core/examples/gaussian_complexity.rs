//! Gaussian complexity of lasso and group cones: Monte Carlo estimate against
//! the closed-form bound, and the restricted eigenvalue under correlation.
//!
//! `cargo run --release --example gaussian_complexity`

use firstorder::cones::{gamma_bound, gamma_estimate, phi_lower_bound, ConeSpec};
use firstorder::model::{CovarianceModel, GroupStructure};

fn main() -> firstorder::error::Result<()> {
    let p = 1000;
    let cov = CovarianceModel::identity(p);
    for k in [5.0, 20.0, 80.0] {
        let cone = ConeSpec::Lasso { k };
        let (est, se) = gamma_estimate(&cone, &cov, 2000, 3)?;
        let bound = gamma_bound(&cone, &cov)?;
        println!("lasso cone k = {k:>4}: estimate {est:.3} +- {se:.3}, closed-form rate sqrt(k log(2p/k)) = {:.3} (up to a constant)", bound.value);
    }
    let groups = GroupStructure::contiguous(p, 4)?;
    let cone = ConeSpec::Group { c: 3.0, s: 5, groups };
    let (est, se) = gamma_estimate(&cone, &cov, 2000, 3)?;
    println!("group cone: estimate {est:.3} +- {se:.3}, closed-form rate {:.3} (up to a constant)", gamma_bound(&cone, &cov)?.value);

    for rho in [0.0, 0.5, 0.9] {
        let ar = CovarianceModel::ar1(200, rho)?;
        let phi = phi_lower_bound(&ConeSpec::Lasso { k: 20.0 }, &ar)?;
        println!("ar1({rho}) restricted eigenvalue lower bound {phi:.4}");
    }
    Ok(())
}
