use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use firstorder::linalg::SpdMatrix;
use firstorder::loss::{curvature_matrix, CurvatureMatrix, CurvatureProvenance, LossKind};
use firstorder::model::{generate_design, generate_linear, generate_logistic, CovarianceModel, DesignKind, GroundTruth, GroupStructure};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, fit_eta, fit_expansion_at, smooth_gradient, SolverConfig};

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Cyclic coordinate descent for `½ (b - z)ᵀK(b - z) + λ‖b‖₁`.
fn coordinate_descent(k: &DMatrix<f64>, z: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let p = z.len();
    let mut b = z.map(|v| soft(v, lambda));
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for j in 0..p {
            let off: f64 = (0..p).filter(|&i| i != j).map(|i| k[(j, i)] * (b[i] - z[i])).sum();
            let new = soft(k[(j, j)] * z[j] - off, lambda) / k[(j, j)];
            change = change.max((new - b[j]).abs());
            b[j] = new;
        }
        if change < 1e-16 {
            break;
        }
    }
    b
}

#[test]
fn expansion_matches_coordinate_descent_for_general_curvature() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let p = 6;
    for trial in 0..20 {
        let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let k = &a * a.transpose() / p as f64 + DMatrix::identity(p, p) * 0.3;
        let z = DVector::from_fn(p, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
        let lambda = rng.random_range(0.05..1.0);
        let curvature = CurvatureMatrix {
            matrix: SpdMatrix::from_dense(k.clone()).unwrap(),
            provenance: CurvatureProvenance::ExactSigma,
        };
        let cfg = SolverConfig {
            kkt_tol: 1e-13,
            ..SolverConfig::default()
        };
        let fit = fit_expansion_at(&curvature, &z, &PenaltySpec::L1 { lambda }, &cfg).unwrap();
        let oracle = coordinate_descent(&k, &z, lambda);
        assert!(fit.converged, "trial {trial}");
        assert!((&fit.solution - &oracle).amax() < 1e-12, "trial {trial}: {}", (&fit.solution - &oracle).amax());
    }
}

#[test]
fn isotropic_expansion_is_the_prox_of_the_noisy_center() {
    let (n, p) = (150, 300);
    let cov = CovarianceModel::identity(p);
    let truth = GroundTruth::sparse(p, 4, 1.5).unwrap();
    let data = generate_linear(generate_design(&cov, n, DesignKind::Gaussian, 4).unwrap(), &truth.beta_star, 1.0, 4).unwrap();
    let k = curvature_matrix(LossKind::Squared, &cov, &truth.beta_star, DesignKind::Gaussian).unwrap();
    let center = &truth.beta_star + data.x.transpose() * data.noise.as_ref().unwrap() / n as f64;
    let radius = 5.0;
    let eta = fit_eta(&data, LossKind::Squared, &k, &truth.beta_star, &PenaltySpec::L1Ball { radius }, &SolverConfig::default())
        .unwrap();
    // projection onto the l1 ball by bisection on the threshold
    let (mut lo, mut hi) = (0.0, center.amax());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if center.iter().map(|v| soft(*v, mid).abs()).sum::<f64>() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let projected = center.map(|v| soft(v, hi));
    assert!((&eta.solution - projected).amax() < 1e-10);
}

#[test]
fn orthonormal_design_lasso_is_soft_thresholding() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (n, p) = (120, 30);
    let g = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = g.qr().q() * (n as f64).sqrt();
    let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let data = firstorder::model::Dataset {
        x,
        y,
        model_kind: firstorder::model::ModelKind::Linear,
        design_kind: DesignKind::Gaussian,
        noise: None,
        noise_sd: None,
        beta_star: DVector::zeros(p),
        seed: 0,
    };
    for lambda in [0.01, 0.05, 0.1, 0.5] {
        let fit = fit_beta_hat(&data, LossKind::Squared, &PenaltySpec::L1 { lambda }, &SolverConfig::default()).unwrap();
        let closed = (data.x.transpose() * &data.y / n as f64).map(|v| soft(v, lambda));
        assert!((&fit.solution - closed).amax() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fits_satisfy_kkt(seed in 0u64..10_000, logistic in any::<bool>(), which in 0usize..3, m in 3usize..30, d in 1usize..4) {
        let p = m * d;
        let n = 60;
        let loss = if logistic { LossKind::Logistic } else { LossKind::Squared };
        let cov = CovarianceModel::ar1(p, 0.3).unwrap();
        let groups = GroupStructure::contiguous(p, d).unwrap();
        let truth = GroundTruth::group_sparse(groups, 2.min(m - 1), 0.4).unwrap();
        let design = generate_design(&cov, n, DesignKind::Gaussian, seed).unwrap();
        let data = if logistic {
            generate_logistic(design, &truth.beta_star, seed).unwrap()
        } else {
            generate_linear(design, &truth.beta_star, 1.0, seed).unwrap()
        };
        let penalty = match which {
            0 => PenaltySpec::L1 { lambda: 0.1 },
            1 => PenaltySpec::L1Ball { radius: 1.0 },
            _ => PenaltySpec::GroupLasso { lambda: 0.15, groups },
        };
        let fit = fit_beta_hat(&data, loss, &penalty, &SolverConfig::default()).unwrap();
        let grad = smooth_gradient(&data, loss, &fit.solution).unwrap();
        let residual = penalty.subdifferential_residual(&fit.solution, &grad).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(residual <= 1e-8, "residual {}", residual);
        prop_assert!((residual - fit.kkt_residual).abs() <= 1e-12);
    }
}
