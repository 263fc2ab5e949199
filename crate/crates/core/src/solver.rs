//! Accelerated proximal gradient (FISTA) for the penalized empirical risk
//! `n⁻¹ Σ ℓ(y_i, x_i'β) + h(β)` and for its quadratic expansion
//! `½ ‖K^{1/2}(β - z)‖² + h(β)`.
//!
//! Momentum is reset whenever the objective increases, so accepted iterates
//! have non-increasing objective. Every result carries the subdifferential
//! residual recomputed at the returned point.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{design_mul, design_tr_mul, pairwise_sum};
use crate::loss::{CurvatureMatrix, LossKind};
use crate::model::Dataset;
use crate::penalty::PenaltySpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub objective_rel_tol: f64,
    /// Step-size multiplier applied on each failed sufficient-decrease test.
    pub shrink: f64,
    /// Initial step `1/L`; `None` derives it from the data.
    pub initial_step: Option<f64>,
    /// Lets the expansion run on a Monte Carlo curvature estimate.
    pub allow_estimated_curvature: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            kkt_tol: 1e-8,
            objective_rel_tol: 1e-12,
            shrink: 0.5,
            initial_step: None,
            allow_estimated_curvature: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0 && self.objective_rel_tol > 0.0) {
            return Err(Error::arg("solver tolerances must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::arg(format!("shrink factor {} outside (0, 1)", self.shrink)));
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::arg(format!("initial step {s} must be positive")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub solution: DVector<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
}

/// The scalar fields of a [`SolverResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSummary {
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub nonzeros: usize,
}

impl SolverResult {
    pub fn summary(&self) -> SolverSummary {
        SolverSummary {
            objective: self.objective,
            kkt_residual: self.kkt_residual,
            iterations: self.iterations,
            converged: self.converged,
            wall_time: self.wall_time,
            nonzeros: self.solution.iter().filter(|&&v| v != 0.0).count(),
        }
    }
}

/// Smooth part of a composite objective, evaluated through a linear image
/// `A β` so that extrapolated points reuse images instead of recomputing them.
trait Smooth {
    fn image(&self, beta: &DVector<f64>) -> DVector<f64>;
    fn value(&self, beta: &DVector<f64>, image: &DVector<f64>) -> f64;
    fn gradient(&self, beta: &DVector<f64>, image: &DVector<f64>) -> DVector<f64>;
    /// `f(to) - f(from) - ∇f(from)'(to - from)`
    fn bregman(&self, from: &DVector<f64>, to: &DVector<f64>, step: &DVector<f64>) -> f64;
}

struct EmpiricalRisk<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    loss: LossKind,
}

impl Smooth for EmpiricalRisk<'_> {
    fn image(&self, beta: &DVector<f64>) -> DVector<f64> {
        design_mul(self.x, beta)
    }

    fn value(&self, _beta: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let terms: Vec<f64> = self.y.iter().zip(u.iter()).map(|(&y, &u)| self.loss.value(y, u)).collect();
        pairwise_sum(&terms) / self.y.len() as f64
    }

    fn gradient(&self, _beta: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let n = self.y.len() as f64;
        let r = DVector::from_iterator(
            self.y.len(),
            self.y.iter().zip(u.iter()).map(|(&y, &u)| self.loss.d1(y, u) / n),
        );
        design_tr_mul(self.x, &r)
    }

    fn bregman(&self, from: &DVector<f64>, to: &DVector<f64>, _step: &DVector<f64>) -> f64 {
        let terms: Vec<f64> = self
            .y
            .iter()
            .zip(from.iter().zip(to.iter()))
            .map(|(&y, (&a, &b))| self.loss.bregman(y, a, b - a))
            .collect();
        pairwise_sum(&terms) / self.y.len() as f64
    }
}

/// `½ (β - z)' K (β - z)` with image `K β`.
struct Quadratic<'a> {
    k: &'a CurvatureMatrix,
    kz: DVector<f64>,
    zkz: f64,
}

impl Smooth for Quadratic<'_> {
    fn image(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.k.matrix.mul(beta)
    }

    fn value(&self, beta: &DVector<f64>, kb: &DVector<f64>) -> f64 {
        (0.5 * beta.dot(kb) - beta.dot(&self.kz) + 0.5 * self.zkz).max(0.0)
    }

    fn gradient(&self, _beta: &DVector<f64>, kb: &DVector<f64>) -> DVector<f64> {
        kb - &self.kz
    }

    fn bregman(&self, from: &DVector<f64>, to: &DVector<f64>, step: &DVector<f64>) -> f64 {
        0.5 * step.dot(&(to - from))
    }
}

struct Iterate {
    beta: DVector<f64>,
    image: DVector<f64>,
}

fn kkt_at<S: Smooth>(smooth: &S, penalty: &PenaltySpec, it: &Iterate) -> f64 {
    let g = smooth.gradient(&it.beta, &it.image);
    penalty
        .subdifferential_residual(&it.beta, &g)
        .unwrap_or(f64::INFINITY)
}

fn fista<S: Smooth>(
    smooth: &S,
    penalty: &PenaltySpec,
    start: DVector<f64>,
    lipschitz: f64,
    config: &SolverConfig,
) -> SolverResult {
    const KKT_EVERY: usize = 10;
    let timer = Instant::now();
    let objective = |it: &Iterate| smooth.value(&it.beta, &it.image) + penalty.value(&it.beta);

    let start_image = smooth.image(&start);
    let mut x = Iterate {
        beta: start,
        image: start_image,
    };
    let mut f_x = objective(&x);
    let mut y = Iterate {
        beta: x.beta.clone(),
        image: x.image.clone(),
    };
    let mut t = 1.0f64;
    let mut lip = lipschitz.max(f64::MIN_POSITIVE);
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        iterations += 1;
        let grad = smooth.gradient(&y.beta, &y.image);
        let next = loop {
            let trial = penalty.prox_unchecked(&(&y.beta - &grad * (1.0 / lip)), 1.0 / lip);
            let step = &trial - &y.beta;
            let image = smooth.image(&trial);
            let dist2 = step.norm_squared();
            if dist2 == 0.0 {
                break Iterate { beta: trial, image };
            }
            let div = smooth.bregman(&y.image, &image, &step);
            if div <= 0.5 * lip * dist2 * (1.0 + 1e-10) || lip > 1e300 {
                break Iterate { beta: trial, image };
            }
            lip /= config.shrink;
        };
        let f_next = objective(&next);

        if f_next > f_x && t > 1.0 {
            // Momentum overshoot: restart from the current point.
            t = 1.0;
            y = Iterate {
                beta: x.beta.clone(),
                image: x.image.clone(),
            };
            continue;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let stalled = (f_x - f_next).abs() <= config.objective_rel_tol * f_x.abs().max(1e-300);
        y = Iterate {
            beta: &next.beta + (&next.beta - &x.beta) * momentum,
            image: &next.image + (&next.image - &x.image) * momentum,
        };
        t = t_next;
        let unchanged = next.beta == x.beta;
        x = next;
        f_x = f_next;

        if unchanged || stalled || iterations == 1 || iterations % KKT_EVERY == 0 {
            kkt = kkt_at(smooth, penalty, &x);
            if kkt <= config.kkt_tol {
                converged = true;
                break;
            }
            if unchanged {
                // A fixed point that fails the KKT test: drop momentum and retry.
                t = 1.0;
                y = Iterate {
                    beta: x.beta.clone(),
                    image: x.image.clone(),
                };
            }
        }
    }
    if !converged {
        // Fresh image: the running one accumulates extrapolation round-off.
        x.image = smooth.image(&x.beta);
        kkt = kkt_at(smooth, penalty, &x);
        converged = kkt <= config.kkt_tol;
        f_x = objective(&x);
    }
    SolverResult {
        solution: x.beta,
        objective: f_x,
        kkt_residual: kkt,
        iterations,
        converged,
        wall_time: timer.elapsed().as_secs_f64(),
    }
}

fn check_problem(dataset: &Dataset, loss: LossKind, penalty: &PenaltySpec) -> Result<()> {
    if dataset.y.len() != dataset.n() {
        return Err(Error::dims("response length differs from design rows"));
    }
    loss.check_labels(&dataset.y)?;
    penalty.validate(dataset.p())
}

/// `n⁻¹ Σ ℓ'(y_i, x_i'β) x_i`
pub fn smooth_gradient(dataset: &Dataset, loss: LossKind, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if beta.len() != dataset.p() {
        return Err(Error::dims(format!(
            "design has {} columns, coefficient vector has {} entries",
            dataset.p(),
            beta.len()
        )));
    }
    let risk = EmpiricalRisk {
        x: &dataset.x,
        y: &dataset.y,
        loss,
    };
    Ok(risk.gradient(beta, &risk.image(beta)))
}

/// `n⁻¹ Σ ℓ(y_i, x_i'β)`
pub fn empirical_risk(dataset: &Dataset, loss: LossKind, beta: &DVector<f64>) -> Result<f64> {
    if beta.len() != dataset.p() {
        return Err(Error::dims("coefficient length differs from design columns"));
    }
    let risk = EmpiricalRisk {
        x: &dataset.x,
        y: &dataset.y,
        loss,
    };
    Ok(risk.value(beta, &risk.image(beta)))
}

/// `n⁻¹ Σ ℓ(y_i, x_i'β) + h(β)`
pub fn objective(
    dataset: &Dataset,
    loss: LossKind,
    penalty: &PenaltySpec,
    beta: &DVector<f64>,
) -> Result<f64> {
    Ok(empirical_risk(dataset, loss, beta)? + penalty.value(beta))
}

/// Penalized M-estimator, started from zero.
pub fn fit_beta_hat(
    dataset: &Dataset,
    loss: LossKind,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    check_problem(dataset, loss, penalty)?;
    let n = dataset.n() as f64;
    let lipschitz = match config.initial_step {
        Some(s) => 1.0 / s,
        None => {
            let max_col = dataset
                .x
                .column_iter()
                .map(|c| c.norm_squared())
                .fold(0.0, f64::max);
            (loss.curvature_bound() * max_col / n).max(1e-12)
        }
    };
    let risk = EmpiricalRisk {
        x: &dataset.x,
        y: &dataset.y,
        loss,
    };
    Ok(fista(&risk, penalty, DVector::zeros(dataset.p()), lipschitz, config))
}

/// `z = β* - K⁻¹ ∇f_n(β*)`; for the squared loss this is
/// `β* + K⁻¹ n⁻¹ Σ ε_i x_i`.
pub fn expansion_center(
    dataset: &Dataset,
    loss: LossKind,
    k: &CurvatureMatrix,
    beta_star: &DVector<f64>,
) -> Result<DVector<f64>> {
    if k.dim() != dataset.p() {
        return Err(Error::dims("curvature matrix and design dimensions differ"));
    }
    let g = smooth_gradient(dataset, loss, beta_star)?;
    Ok(beta_star - k.matrix.inv_mul(&g))
}

/// First-order expansion `η = argmin ½ ‖K^{1/2}(β - z)‖² + h(β)`, started
/// from `z` with step `1/λ_max(K)`.
pub fn fit_eta(
    dataset: &Dataset,
    loss: LossKind,
    k: &CurvatureMatrix,
    beta_star: &DVector<f64>,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    check_problem(dataset, loss, penalty)?;
    if !k.is_exact() && !config.allow_estimated_curvature {
        return Err(Error::Unsupported(
            "the expansion needs an exact or quadrature curvature matrix; \
             set allow_estimated_curvature to use a Monte Carlo estimate"
                .into(),
        ));
    }
    let z = expansion_center(dataset, loss, k, beta_star)?;
    fit_expansion_at(k, &z, penalty, config)
}

/// `argmin ½ ‖K^{1/2}(β - z)‖² + h(β)` for a given center `z`.
pub fn fit_expansion_at(
    k: &CurvatureMatrix,
    z: &DVector<f64>,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    penalty.validate(z.len())?;
    if k.dim() != z.len() {
        return Err(Error::dims("curvature matrix and center dimensions differ"));
    }
    let kz = k.matrix.mul(z);
    let quad = Quadratic {
        k,
        zkz: z.dot(&kz),
        kz,
    };
    let lipschitz = match config.initial_step {
        Some(s) => 1.0 / s,
        None => k.matrix.max_eigenvalue(),
    };
    let start = match penalty {
        PenaltySpec::L1Ball { radius } => crate::penalty::project_l1_ball(z, *radius),
        _ => z.clone(),
    };
    Ok(fista(&quad, penalty, start, lipschitz, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;
    use crate::loss::CurvatureProvenance;
    use crate::model::{DesignKind, ModelKind};

    fn dataset(x: DMatrix<f64>, y: DVector<f64>, model: ModelKind) -> Dataset {
        let p = x.ncols();
        Dataset {
            x,
            y,
            model_kind: model,
            design_kind: DesignKind::Gaussian,
            noise: None,
            noise_sd: None,
            beta_star: DVector::zeros(p),
            seed: 0,
        }
    }

    fn pseudo(n: usize, p: usize, salt: u64) -> DMatrix<f64> {
        let mut s = salt;
        DMatrix::from_fn(n, p, |_, _| {
            s = crate::rng::mix64(s);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
    }

    #[test]
    fn unpenalized_least_squares() {
        let x = pseudo(30, 4, 1);
        let y = DVector::from_fn(30, |i, _| (i as f64).sin());
        let ds = dataset(x.clone(), y.clone(), ModelKind::Linear);
        // Coefficient error is bounded by the residual over the smallest eigenvalue.
        let cfg = SolverConfig {
            kkt_tol: 1e-12,
            ..SolverConfig::default()
        };
        let res = fit_beta_hat(&ds, LossKind::Squared, &PenaltySpec::L1 { lambda: 0.0 }, &cfg).unwrap();
        let ols = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
        assert!(res.converged);
        assert!((res.solution - ols).amax() < 1e-8);
    }

    #[test]
    fn large_penalty_gives_zero() {
        let x = pseudo(20, 6, 2);
        let y = DVector::from_fn(20, |i, _| i as f64 * 0.1);
        let ds = dataset(x.clone(), y.clone(), ModelKind::Linear);
        let lam = (x.transpose() * &y).amax() / 20.0;
        let pen = PenaltySpec::L1 { lambda: lam };
        let res = fit_beta_hat(&ds, LossKind::Squared, &pen, &SolverConfig::default()).unwrap();
        assert!(res.solution.iter().all(|&v| v == 0.0));
        assert_eq!(res.kkt_residual, 0.0);
    }

    #[test]
    fn quadratic_with_identity_is_one_prox_step() {
        let k = CurvatureMatrix {
            matrix: SpdMatrix::identity(5),
            provenance: CurvatureProvenance::ExactSigma,
        };
        let z = DVector::from_vec(vec![1.0, -0.2, 0.05, 3.0, -2.0]);
        let pen = PenaltySpec::L1 { lambda: 0.3 };
        let res = fit_expansion_at(&k, &z, &pen, &SolverConfig::default()).unwrap();
        assert_eq!(res.solution, pen.prox(&z, 1.0).unwrap());
        assert_eq!(res.iterations, 1);
        let none = fit_expansion_at(&k, &z, &PenaltySpec::L1 { lambda: 0.0 }, &SolverConfig::default())
            .unwrap();
        assert_eq!(none.solution, z);
    }

    #[test]
    fn estimated_curvature_requires_opt_in() {
        let k = CurvatureMatrix {
            matrix: SpdMatrix::identity(2),
            provenance: CurvatureProvenance::McEstimate,
        };
        let ds = dataset(pseudo(5, 2, 3), DVector::zeros(5), ModelKind::Linear);
        let pen = PenaltySpec::L1 { lambda: 0.1 };
        let beta = DVector::zeros(2);
        assert!(fit_eta(&ds, LossKind::Squared, &k, &beta, &pen, &SolverConfig::default()).is_err());
        let cfg = SolverConfig {
            allow_estimated_curvature: true,
            ..SolverConfig::default()
        };
        assert!(fit_eta(&ds, LossKind::Squared, &k, &beta, &pen, &cfg).is_ok());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = pseudo(25, 5, 4);
        let y = DVector::from_fn(25, |i, _| (i % 2) as f64);
        let ds = dataset(x, y, ModelKind::Logistic);
        for (salt, loss) in [(10, LossKind::Logistic), (11, LossKind::Squared)] {
            let beta = pseudo(5, 1, salt).column(0).into_owned();
            let g = smooth_gradient(&ds, loss, &beta).unwrap();
            for j in 0..5 {
                let h = 1e-5;
                let mut bp = beta.clone();
                bp[j] += h;
                let mut bm = beta.clone();
                bm[j] -= h;
                let fd = (empirical_risk(&ds, loss, &bp).unwrap() - empirical_risk(&ds, loss, &bm).unwrap())
                    / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1e-3), "{fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn rejects_bad_labels_and_config() {
        let ds = dataset(pseudo(4, 2, 5), DVector::from_vec(vec![0.0, 1.0, 2.0, 0.0]), ModelKind::Logistic);
        let pen = PenaltySpec::L1 { lambda: 0.1 };
        assert!(matches!(
            fit_beta_hat(&ds, LossKind::Logistic, &pen, &SolverConfig::default()),
            Err(Error::InvalidLabel { .. })
        ));
        let bad = SolverConfig {
            shrink: 1.5,
            ..SolverConfig::default()
        };
        assert!(fit_beta_hat(&ds, LossKind::Squared, &pen, &bad).is_err());
    }
}
