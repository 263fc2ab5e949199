//! Draws a sparse linear dataset with an AR(1) design, saves it, and reads it
//! back.
//!
//! `cargo run --release --example generate_data`

use firstorder::model::{generate_design, generate_linear, sigma_star, CovarianceModel, Dataset, DesignKind, GroundTruth};

fn main() -> firstorder::error::Result<()> {
    let (n, p, s) = (300, 500, 5);
    let cov = CovarianceModel::ar1(p, 0.5)?;
    let truth = GroundTruth::sparse(p, s, 1.0)?;
    let design = generate_design(&cov, n, DesignKind::Gaussian, 42)?;
    let data = generate_linear(design, &truth.beta_star, 1.0, 42)?;
    println!("drew {} x {} design, support {:?}", data.n(), data.p(), truth.support);
    println!("realized noise scale sigma* = {:.4}", sigma_star(&data)?);

    let dir = std::env::temp_dir().join("firstorder_generate_data");
    data.save(&dir)?;
    let back = Dataset::load(&dir)?;
    assert_eq!(back.x, data.x);
    assert_eq!(back.y, data.y);
    println!("saved to and reloaded from {}", dir.display());
    Ok(())
}
