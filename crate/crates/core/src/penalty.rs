//! Penalties `h(β)` with exact proximal operators.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{l1_norm, linf_norm};
use crate::model::GroupStructure;

/// Absolute tolerance of the `‖β‖₁ = R` boundary test.
pub const BALL_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltySpec {
    /// `λ ‖β‖₁`
    L1 { lambda: f64 },
    /// Indicator of `{‖β‖₁ ≤ R}`.
    L1Ball { radius: f64 },
    /// `λ Σ_k ‖β_{G_k}‖`
    GroupLasso { lambda: f64, groups: GroupStructure },
}

/// `sign(x) (|x| - t)₊` with an exact zero below the threshold.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Euclidean projection onto `{‖b‖₁ ≤ radius}` by sorting magnitudes.
pub fn project_l1_ball(x: &DVector<f64>, radius: f64) -> DVector<f64> {
    if l1_norm(x) <= radius {
        return x.clone();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    x.map(|v| soft_threshold(v, theta))
}

impl PenaltySpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            PenaltySpec::L1 { lambda } | PenaltySpec::GroupLasso { lambda, .. }
                if !(*lambda >= 0.0 && lambda.is_finite()) =>
            {
                Err(Error::arg(format!("penalty level {lambda} must be finite and >= 0")))
            }
            PenaltySpec::L1Ball { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::arg(format!("ball radius {radius} must be positive")))
            }
            PenaltySpec::GroupLasso { groups, .. } if groups.p != p => Err(Error::dims(format!(
                "groups cover {} coordinates, vector has {p}",
                groups.p
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltySpec::L1 { .. } => "l1",
            PenaltySpec::L1Ball { .. } => "l1_ball",
            PenaltySpec::GroupLasso { .. } => "group_lasso",
        }
    }

    /// `c · h`; the indicator of a set is unchanged.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            PenaltySpec::L1 { lambda } => PenaltySpec::L1 { lambda: lambda * c },
            PenaltySpec::L1Ball { radius } => PenaltySpec::L1Ball { radius: *radius },
            PenaltySpec::GroupLasso { lambda, groups } => PenaltySpec::GroupLasso {
                lambda: lambda * c,
                groups: *groups,
            },
        }
    }

    pub fn groups(&self) -> Option<&GroupStructure> {
        match self {
            PenaltySpec::GroupLasso { groups, .. } => Some(groups),
            _ => None,
        }
    }

    /// `+∞` outside the ball for the constrained variant.
    pub fn value(&self, beta: &DVector<f64>) -> f64 {
        match self {
            PenaltySpec::L1 { lambda } => lambda * l1_norm(beta),
            PenaltySpec::L1Ball { radius } => {
                if l1_norm(beta) <= radius + BALL_BOUNDARY_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            PenaltySpec::GroupLasso { lambda, groups } => {
                lambda * (0..groups.m).map(|k| groups.block_norm(beta, k)).sum::<f64>()
            }
        }
    }

    /// `argmin_b ‖x - b‖² / 2 + t h(b)`
    pub fn prox(&self, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        if !(t > 0.0) {
            return Err(Error::arg(format!("prox step must be positive, got {t}")));
        }
        self.validate(x.len())?;
        Ok(self.prox_unchecked(x, t))
    }

    pub(crate) fn prox_unchecked(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        match self {
            PenaltySpec::L1 { lambda } => {
                let thr = t * lambda;
                x.map(|v| soft_threshold(v, thr))
            }
            PenaltySpec::L1Ball { radius } => project_l1_ball(x, *radius),
            PenaltySpec::GroupLasso { lambda, groups } => {
                let thr = t * lambda;
                let mut out = DVector::zeros(x.len());
                if groups.d == 1 {
                    return x.map(|v| soft_threshold(v, thr));
                }
                for r in groups.iter() {
                    let block = x.rows(r.start, groups.d);
                    let norm = block.norm();
                    if norm > thr {
                        out.rows_mut(r.start, groups.d)
                            .copy_from(&(block * (1.0 - thr / norm)));
                    }
                }
                out
            }
        }
    }

    /// Size of the violation of `-grad ∈ ∂h(β)`; zero at a minimizer of
    /// `f + h` when `grad = ∇f(β)`.
    pub fn subdifferential_residual(&self, beta: &DVector<f64>, grad: &DVector<f64>) -> Result<f64> {
        if beta.len() != grad.len() {
            return Err(Error::dims(format!(
                "coefficients have {} entries, gradient has {}",
                beta.len(),
                grad.len()
            )));
        }
        self.validate(beta.len())?;
        Ok(match self {
            PenaltySpec::L1 { lambda } => beta
                .iter()
                .zip(grad.iter())
                .map(|(&b, &g)| {
                    if b != 0.0 {
                        (g + lambda * b.signum()).abs()
                    } else {
                        (g.abs() - lambda).max(0.0)
                    }
                })
                .fold(0.0, f64::max),
            PenaltySpec::L1Ball { radius } => {
                let norm = l1_norm(beta);
                if norm > radius + BALL_BOUNDARY_TOL {
                    f64::INFINITY
                } else if norm < radius - BALL_BOUNDARY_TOL {
                    linf_norm(grad)
                } else {
                    let mu = linf_norm(grad);
                    beta.iter()
                        .zip(grad.iter())
                        .filter(|(&b, _)| b != 0.0)
                        .map(|(&b, &g)| (g + mu * b.signum()).abs())
                        .fold(0.0, f64::max)
                }
            }
            PenaltySpec::GroupLasso { lambda, groups } => groups
                .iter()
                .map(|r| {
                    let b = beta.rows(r.start, groups.d);
                    let g = grad.rows(r.start, groups.d);
                    let bn = b.norm();
                    if bn != 0.0 {
                        (g + b * (lambda / bn)).norm()
                    } else {
                        (g.norm() - lambda).max(0.0)
                    }
                })
                .fold(0.0, f64::max),
        })
    }
}
