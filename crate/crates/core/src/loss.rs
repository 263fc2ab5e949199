//! Losses `ℓ(y, u)`, their derivatives in `u`, the population curvature
//! matrix `K = E[ℓ''(Y, X'β*) X X']` and the loss-regularity constants.
//!
//! The logistic loss is the convex negative log-likelihood
//! `ℓ(y, u) = (y - 1) u + log(1 + e^u)` for the model
//! `P(Y = 1 | x) = 1 / (1 + e^{x'β*})`. Its score `y - 1/(1 + e^u)` has mean
//! zero at the true coefficients.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::SpdMatrix;
use crate::model::{CovarianceModel, DesignKind};
use crate::quadrature;
use crate::rng::{stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Logistic,
}

/// `log(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    if u <= 0.0 {
        u.exp().ln_1p()
    } else {
        u + (-u).exp().ln_1p()
    }
}

/// `e^u / (1 + e^u)`
pub fn logistic_cdf(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `e^u / (1 + e^u)²`, symmetric in `u`.
pub fn logistic_density(u: f64) -> f64 {
    let e = (-u.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Logistic => "logistic",
        }
    }

    pub fn value(self, y: f64, u: f64) -> f64 {
        match self {
            LossKind::Squared => 0.5 * (y - u) * (y - u),
            LossKind::Logistic => (y - 1.0) * u + softplus(u),
        }
    }

    pub fn d1(self, y: f64, u: f64) -> f64 {
        match self {
            LossKind::Squared => u - y,
            LossKind::Logistic => y - logistic_cdf(-u),
        }
    }

    /// Independent of `y` for both losses.
    pub fn d2(self, _y: f64, u: f64) -> f64 {
        match self {
            LossKind::Squared => 1.0,
            LossKind::Logistic => logistic_density(u),
        }
    }

    /// `∂ℓ''/∂u`
    pub fn d3(self, _y: f64, u: f64) -> f64 {
        match self {
            LossKind::Squared => 0.0,
            LossKind::Logistic => logistic_density(u) * (1.0 - 2.0 * logistic_cdf(u)),
        }
    }

    /// `ℓ(y, u + δ) - ℓ(y, u) - ℓ'(y, u) δ`, accurate for small `δ`.
    pub fn bregman(self, _y: f64, u: f64, delta: f64) -> f64 {
        match self {
            LossKind::Squared => 0.5 * delta * delta,
            LossKind::Logistic => {
                let s = logistic_cdf(u);
                if delta.abs() < 1e-4 {
                    let d2 = s * (1.0 - s);
                    let d3 = d2 * (1.0 - 2.0 * s);
                    let d4 = d2 * (1.0 - 6.0 * s + 6.0 * s * s);
                    let d = delta;
                    d * d * (0.5 * d2 + d * (d3 / 6.0 + d * d4 / 24.0))
                } else if delta.abs() < 1.0 {
                    (s * delta.exp_m1()).ln_1p() - s * delta
                } else {
                    softplus(u + delta) - softplus(u) - s * delta
                }
            }
        }
    }

    /// Lipschitz constant of `u ↦ ℓ''(y, u)`.
    pub fn lipschitz_d2(self) -> f64 {
        match self {
            LossKind::Squared => 0.0,
            LossKind::Logistic => 1.0 / (6.0 * 3f64.sqrt()),
        }
    }

    /// Bound on `ℓ''` as quoted for the logistic regularity conditions.
    pub fn curvature_bound_reported(self) -> f64 {
        1.0
    }

    /// `sup_u ℓ''`; this is the value used in step sizes and bounds.
    pub fn curvature_bound(self) -> f64 {
        match self {
            LossKind::Squared => 1.0,
            LossKind::Logistic => 0.25,
        }
    }

    pub fn check_label(self, y: f64) -> Result<()> {
        match self {
            LossKind::Logistic if y != 0.0 && y != 1.0 => Err(Error::InvalidLabel {
                value: y,
                loss: self.name(),
            }),
            _ => Ok(()),
        }
    }

    pub fn check_labels(self, y: &DVector<f64>) -> Result<()> {
        y.iter().try_for_each(|&v| self.check_label(v))
    }

    pub fn checked_value(self, y: f64, u: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(self.value(y, u))
    }

    pub fn checked_d1(self, y: f64, u: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(self.d1(y, u))
    }

    pub fn checked_d2(self, y: f64, u: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(self.d2(y, u))
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "squared" => Ok(LossKind::Squared),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::Config(format!("unknown loss '{other}'"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureProvenance {
    ExactSigma,
    SteinQuadrature,
    McEstimate,
}

/// The population curvature matrix, defining `‖u‖_K = ‖K^{1/2} u‖`.
#[derive(Debug, Clone)]
pub struct CurvatureMatrix {
    pub matrix: SpdMatrix,
    pub provenance: CurvatureProvenance,
}

impl CurvatureMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.matrix.norm(u)
    }

    pub fn is_exact(&self) -> bool {
        self.provenance != CurvatureProvenance::McEstimate
    }

    /// Row-major binary, the same format as designs.
    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_matrix(path, &self.matrix.to_dense())
    }

    pub fn load(path: &Path, p: usize, provenance: CurvatureProvenance) -> Result<Self> {
        let m = io::read_matrix(path, p, p)?;
        Ok(CurvatureMatrix {
            matrix: SpdMatrix::from_dense(m)?,
            provenance,
        })
    }
}

/// `E σ'(t)` and `E σ'(t) t²` for `t ~ N(0, v²)`.
pub fn logistic_curvature_moments(v: f64) -> (f64, f64) {
    let m0 = quadrature::normal_expectation(v, 1e-13, logistic_density);
    let m2 = quadrature::normal_expectation(v, 1e-13, |t| logistic_density(t) * t * t);
    (m0, m2)
}

/// Population curvature matrix.
///
/// Squared loss gives `K = Σ` for every design. For the logistic loss under a
/// Gaussian design, `t = X'β* ~ N(0, v²)` and the residual of `X` after
/// regressing on `t` is independent of `t`, so
/// `K = m0 Σ + (m2 / v² - m0) w w' / v²` with `w = Σβ*`.
pub fn curvature_matrix(
    kind: LossKind,
    cov: &CovarianceModel,
    beta_star: &DVector<f64>,
    design: DesignKind,
) -> Result<CurvatureMatrix> {
    let p = cov.dim();
    if beta_star.len() != p {
        return Err(Error::dims(format!(
            "covariance is {p}x{p}, coefficient vector has {} entries",
            beta_star.len()
        )));
    }
    match kind {
        LossKind::Squared => Ok(CurvatureMatrix {
            matrix: cov.matrix.clone(),
            provenance: CurvatureProvenance::ExactSigma,
        }),
        LossKind::Logistic => {
            if design != DesignKind::Gaussian {
                return Err(Error::Unsupported(format!(
                    "closed-form logistic curvature needs a gaussian design, got {design}; \
                     use curvature_matrix_mc"
                )));
            }
            let w = cov.matrix.mul(beta_star);
            let v2 = beta_star.dot(&w);
            if v2 == 0.0 {
                return Ok(CurvatureMatrix {
                    matrix: cov.matrix.scaled(0.25)?,
                    provenance: CurvatureProvenance::SteinQuadrature,
                });
            }
            let (m0, m2) = logistic_curvature_moments(v2.sqrt());
            let coef = (m2 / v2 - m0) / v2;
            let mut k = cov.matrix.to_dense() * m0;
            k.ger(coef, &w, &w, 1.0);
            Ok(CurvatureMatrix {
                matrix: SpdMatrix::from_dense(k)?,
                provenance: CurvatureProvenance::SteinQuadrature,
            })
        }
    }
}

/// Monte Carlo estimate `n⁻¹ Σ ℓ''(X_i'β*) X_i X_i'` from `n_mc` fresh rows.
pub fn curvature_matrix_mc(
    kind: LossKind,
    cov: &CovarianceModel,
    beta_star: &DVector<f64>,
    design: DesignKind,
    n_mc: usize,
    seed: u64,
) -> Result<CurvatureMatrix> {
    let p = cov.dim();
    if beta_star.len() != p || n_mc == 0 {
        return Err(Error::arg("curvature estimate needs matching dimensions and n_mc > 0"));
    }
    let root = cov.matrix.sqrt_dense();
    let mut rng = stream_rng(seed, stream::CURVATURE_MC);
    const CHUNK: usize = 4096;
    let mut acc = DMatrix::<f64>::zeros(p, p);
    let mut done = 0;
    while done < n_mc {
        let rows = CHUNK.min(n_mc - done);
        let mut g = DMatrix::<f64>::zeros(rows, p);
        for i in 0..rows {
            for j in 0..p {
                g[(i, j)] = match design {
                    DesignKind::Gaussian => rng.sample(StandardNormal),
                    DesignKind::Rademacher => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
            }
        }
        let x = g * &root;
        let u = &x * beta_star;
        let mut weighted = x.clone();
        for i in 0..rows {
            let w = kind.d2(0.0, u[i]);
            weighted.row_mut(i).scale_mut(w);
        }
        acc += x.transpose() * weighted;
        done += rows;
    }
    acc /= n_mc as f64;
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(CurvatureMatrix {
        matrix: SpdMatrix::from_dense(sym)?,
        provenance: CurvatureProvenance::McEstimate,
    })
}

/// `sup_u ‖Σ^{1/2} u‖² / ‖K^{1/2} u‖² = λ_max(K^{-1/2} Σ K^{-1/2})`.
pub fn b3_constant(cov: &CovarianceModel, k: &CurvatureMatrix) -> Result<f64> {
    if cov.dim() != k.dim() {
        return Err(Error::dims("covariance and curvature dimensions differ"));
    }
    match (&cov.matrix, &k.matrix) {
        (SpdMatrix::ScaledIdentity { scale: a, .. }, SpdMatrix::ScaledIdentity { scale: b, .. }) => {
            Ok(a / b)
        }
        (sigma, SpdMatrix::ScaledIdentity { scale, .. }) => Ok(sigma.max_eigenvalue() / scale),
        (SpdMatrix::ScaledIdentity { scale, .. }, SpdMatrix::Dense(_)) => {
            Ok(scale / k.matrix.min_eigenvalue())
        }
        (sigma, SpdMatrix::Dense(kd)) => {
            let m = &kd.inv_sqrt * sigma.to_dense() * &kd.inv_sqrt;
            let m = (&m + m.transpose()) * 0.5;
            Ok(SymmetricEigen::new(m).eigenvalues.max())
        }
    }
}

/// `inf_{|u| ≤ τ} ℓ''(y, u)`.
pub fn curvature_lower_bound(kind: LossKind, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::arg(format!("tau must be nonnegative, got {tau}")));
    }
    Ok(match kind {
        LossKind::Squared => 1.0,
        LossKind::Logistic => logistic_density(tau),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityReport {
    /// Largest `[ℓ''(s) / ℓ''(t)] / exp(3|s - t|)` over the grid.
    pub worst_quotient: f64,
    pub worst_pair: (f64, f64),
    pub pairs_checked: usize,
    pub holds: bool,
}

/// Checks `ℓ''(s) / ℓ''(t) ≤ exp(3|s - t|)` on the given pairs.
pub fn stability_ratio_check(
    kind: LossKind,
    pairs: impl IntoIterator<Item = (f64, f64)>,
) -> StabilityReport {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = (0.0, 0.0);
    let mut count = 0;
    for (s, t) in pairs {
        let q = (kind.d2(0.0, s) / kind.d2(0.0, t)) * (-3.0 * (s - t).abs()).exp();
        if q > worst {
            worst = q;
            worst_pair = (s, t);
        }
        count += 1;
    }
    StabilityReport {
        worst_quotient: worst,
        worst_pair,
        pairs_checked: count,
        holds: worst <= 1.0 + 1e-12,
    }
}

/// All pairs of grid points `lo, lo + step, ..., hi` at distance at most
/// `max_gap`.
pub fn band_grid(lo: f64, hi: f64, step: f64, max_gap: f64) -> impl Iterator<Item = (f64, f64)> {
    let m = ((hi - lo) / step).round() as i64;
    let band = (max_gap / step + 1e-9).floor() as i64;
    (0..=m).flat_map(move |i| {
        let from = (i - band).max(0);
        let to = (i + band).min(m);
        (from..=to).map(move |j| (lo + i as f64 * step, lo + j as f64 * step))
    })
}

/// `a = ∫_0^1 [ℓ''(u + tδ) - ℓ''(u)] dt` by adaptive quadrature.
pub fn taylor_remainder_coefficient(kind: LossKind, y: f64, u: f64, delta: f64) -> f64 {
    match kind {
        LossKind::Squared => 0.0,
        LossKind::Logistic => {
            if delta == 0.0 {
                return 0.0;
            }
            let base = kind.d2(y, u);
            quadrature::integrate(|t| kind.d2(y, u + t * delta) - base, 0.0, 1.0, 1e-15)
        }
    }
}
