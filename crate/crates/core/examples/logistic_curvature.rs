//! Population curvature of the logistic loss: closed form from Gaussian
//! quadrature against a Monte Carlo estimate, plus the loss constants.
//!
//! `cargo run --release --example logistic_curvature`

use nalgebra::DVector;

use firstorder::loss::{b3_constant, curvature_matrix, curvature_matrix_mc, LossKind};
use firstorder::model::{CovarianceModel, DesignKind};

fn main() -> firstorder::error::Result<()> {
    let p = 4;
    let cov = CovarianceModel::ar1(p, 0.5)?;
    let raw = DVector::from_vec(vec![1.0, -1.0, 0.5, 0.0]);
    let beta = &raw / cov.matrix.norm(&raw);
    let exact = curvature_matrix(LossKind::Logistic, &cov, &beta, DesignKind::Gaussian)?;
    let mc = curvature_matrix_mc(LossKind::Logistic, &cov, &beta, DesignKind::Gaussian, 400_000, 9)?;
    println!("quadrature K:{}", exact.matrix.to_dense());
    println!("Monte Carlo K:{}", mc.matrix.to_dense());
    println!("B3 = {:.4}", b3_constant(&cov, &exact)?);
    let l = LossKind::Logistic;
    println!(
        "sup |l'''| = {:.6}, sup l'' = {} (reported bound {})",
        l.lipschitz_d2(),
        l.curvature_bound(),
        l.curvature_bound_reported()
    );
    Ok(())
}
