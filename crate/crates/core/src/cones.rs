//! Tuning levels, the cones that contain error vectors, their Gaussian
//! complexity and restricted-eigenvalue lower bounds.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{l1_norm, mean_and_se};
use crate::loss::LossKind;
use crate::model::{CovarianceModel, GroupStructure};
use crate::penalty::soft_threshold;
use crate::rng::{stream, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeSpec {
    /// `{u : ‖u‖₁ ≤ √k ‖u‖}`
    Lasso { k: f64 },
    /// `{u : Σ_k ‖u_{G_k}‖ ≤ c √s ‖u‖}`
    Group { c: f64, s: usize, groups: GroupStructure },
    /// `{u : ‖u_{S^c}‖₁ ≤ ‖u_S‖₁}`
    Support { support: Vec<usize> },
}

/// Penalty level that dominates the noise in the lasso analysis:
/// `L σ* (1 + 3ξ) √(2 log(p/s) / n)`, with `L σ*` replaced by `L / 2` for
/// the logistic loss.
pub fn lambda_lasso(
    loss: LossKind,
    subgaussian: f64,
    sigma_star: f64,
    xi: f64,
    p: usize,
    s: usize,
    n: usize,
) -> Result<f64> {
    if s == 0 || p <= s {
        return Err(Error::arg(format!("need p > s >= 1, got p = {p}, s = {s}")));
    }
    if !(xi > 0.0) || n == 0 {
        return Err(Error::arg("need xi > 0 and n >= 1"));
    }
    let scale = match loss {
        LossKind::Squared => subgaussian * sigma_star,
        LossKind::Logistic => subgaussian / 2.0,
    };
    Ok(scale * (1.0 + 3.0 * xi) * (2.0 * (p as f64 / s as f64).ln() / n as f64).sqrt())
}

/// Group penalty level `L σ* (1 + ξ) [√d + (1 + 2ξ) √(2 log(M/s))] / √n`.
pub fn lambda_group(
    subgaussian: f64,
    sigma_star: f64,
    xi: f64,
    d: usize,
    m: usize,
    s: usize,
    n: usize,
) -> Result<f64> {
    if s == 0 || m <= s || d == 0 {
        return Err(Error::arg(format!("need M > s >= 1 and d >= 1, got M = {m}, s = {s}, d = {d}")));
    }
    if !(xi > 0.0) || n == 0 {
        return Err(Error::arg("need xi > 0 and n >= 1"));
    }
    let inner = (d as f64).sqrt() + (1.0 + 2.0 * xi) * (2.0 * (m as f64 / s as f64).ln()).sqrt();
    Ok(subgaussian * sigma_star * (1.0 + xi) * inner / (n as f64).sqrt())
}

/// Group cone constant `2 + 3/ξ`.
pub fn group_cone_constant(xi: f64) -> f64 {
    2.0 + 3.0 / xi
}

/// Lower bound `1 - 2 / (ξ² log(p/s) (p/s)^ξ)` on the probability that both
/// lasso error vectors lie in the cone of [`lasso_cone_parameter`]. Also the
/// probability of the sparsity bound on the expansion, with `p` read as the
/// number of groups.
pub fn lasso_cone_probability(xi: f64, p: usize, s: usize) -> f64 {
    let ratio = p as f64 / s as f64;
    1.0 - 2.0 / (xi * xi * ratio.ln() * ratio.powf(xi))
}

/// Lower bound `1 - 2 / (2ξ² log(M/s) (M/s)^ξ)` on the probability that both
/// group lasso error vectors lie in the cone of [`group_cone_constant`].
pub fn group_cone_probability(xi: f64, m: usize, s: usize) -> f64 {
    let ratio = m as f64 / s as f64;
    1.0 - 2.0 / (2.0 * xi * xi * ratio.ln() * ratio.powf(xi))
}

/// Lasso cone parameter `s (6 + 2/ξ)²` that contains both error vectors.
pub fn lasso_cone_parameter(xi: f64, s: usize) -> f64 {
    s as f64 * (6.0 + 2.0 / xi).powi(2)
}

/// Minimax rate `√(2 s log(p/s) / n)` for `s`-sparse vectors.
pub fn lasso_rate(s: usize, p: usize, n: usize) -> f64 {
    (2.0 * s as f64 * (p as f64 / s as f64).ln() / n as f64).sqrt()
}

/// Rate `√((s d + s log(M/s)) / n)` for `s`-group-sparse vectors.
pub fn group_rate(s: usize, d: usize, m: usize, n: usize) -> f64 {
    let s_f = s as f64;
    ((s_f * d as f64 + s_f * (m as f64 / s_f).ln()) / n as f64).sqrt()
}

/// Membership with relative slack `tol`; the origin is always a member.
pub fn cone_member(cone: &ConeSpec, u: &DVector<f64>, tol: f64) -> bool {
    match cone {
        ConeSpec::Lasso { k } => l1_norm(u) <= k.sqrt() * u.norm() * (1.0 + tol),
        ConeSpec::Group { c, s, groups } => {
            let mixed: f64 = (0..groups.m).map(|g| groups.block_norm(u, g)).sum();
            mixed <= c * (*s as f64).sqrt() * u.norm() * (1.0 + tol)
        }
        ConeSpec::Support { support } => {
            let on: f64 = support.iter().map(|&j| u[j].abs()).sum();
            let off = l1_norm(u) - on;
            off <= on * (1.0 + tol) + tol * f64::EPSILON
        }
    }
}

/// `max gᵀu` over unit `u` with `‖u‖₁ ≤ √k`. The maximizer is proportional
/// to `soft_threshold(g, t)` for the smallest `t` meeting the constraint.
pub fn lasso_cone_support_function(g: &[f64], k: f64) -> f64 {
    let ratio = |t: f64| {
        let (mut l1, mut l2) = (0.0, 0.0);
        for &v in g {
            let w = soft_threshold(v, t).abs();
            l1 += w;
            l2 += w * w;
        }
        if l2 == 0.0 {
            1.0
        } else {
            l1 / l2.sqrt()
        }
    };
    let value = |t: f64| {
        let (mut num, mut l2) = (0.0, 0.0);
        for &v in g {
            let w = soft_threshold(v, t);
            num += v * w;
            l2 += w * w;
        }
        if l2 == 0.0 {
            0.0
        } else {
            num / l2.sqrt()
        }
    };
    let root_k = k.sqrt();
    if ratio(0.0) <= root_k {
        return value(0.0);
    }
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut lo, mut hi) = (0.0, gmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ratio(mid) <= root_k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    value(hi)
}

/// Monte Carlo estimate of `E sup_{u ∈ T, ‖u‖ = 1} gᵀu` with its standard
/// error. Only the identity covariance is supported.
pub fn gamma_estimate(
    cone: &ConeSpec,
    cov: &CovarianceModel,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !cov.is_identity() {
        return Err(Error::Unsupported(
            "Gaussian complexity estimates need the identity covariance; use gamma_bound".into(),
        ));
    }
    if n_mc == 0 {
        return Err(Error::arg("n_mc must be positive"));
    }
    let p = cov.dim();
    let mut rng = stream_rng(seed, stream::GAUSSIAN_WIDTH);
    let mut g = vec![0.0; p];
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        g.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let sup = match cone {
            ConeSpec::Lasso { k } => lasso_cone_support_function(&g, *k),
            ConeSpec::Group { c, s, groups } => {
                if groups.p != p {
                    return Err(Error::dims("group structure does not match the covariance"));
                }
                let norms: Vec<f64> = (0..groups.m)
                    .map(|k| g[groups.group(k)].iter().map(|v| v * v).sum::<f64>().sqrt())
                    .collect();
                lasso_cone_support_function(&norms, c * c * *s as f64)
            }
            ConeSpec::Support { .. } => {
                return Err(Error::Unsupported(
                    "no exact per-draw supremum for support cones; use gamma_bound".into(),
                ))
            }
        };
        draws.push(sup);
    }
    Ok(mean_and_se(&draws))
}

/// Closed-form complexity bound, stated up to an absolute constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaBound {
    pub value: f64,
    pub phi: f64,
}

impl GammaBound {
    /// `value / √n`
    pub fn rate(&self, n: usize) -> f64 {
        self.value / (n as f64).sqrt()
    }
}

/// `φ⁻¹ √(k log(2p/k))` for lasso cones and `φ⁻¹ √(sd + s log(M/s))` for
/// group cones. A support cone of size `s` lies in the lasso cone `4s`.
pub fn gamma_bound(cone: &ConeSpec, cov: &CovarianceModel) -> Result<GammaBound> {
    let p = cov.dim() as f64;
    let phi = phi_lower_bound(cone, cov)?;
    let lasso = |k: f64| (k * (2.0 * p / k).ln()).max(0.0).sqrt();
    let core = match cone {
        ConeSpec::Lasso { k } => lasso(*k),
        ConeSpec::Support { support } => lasso(4.0 * support.len() as f64),
        ConeSpec::Group { s, groups, .. } => {
            let s_f = *s as f64;
            (s_f * groups.d as f64 + s_f * (groups.m as f64 / s_f).ln()).sqrt()
        }
    };
    Ok(GammaBound {
        value: core / phi,
        phi,
    })
}

/// Lower bound on `min ‖Σ^{1/2}u‖` over unit `u` in the cone: `√λ_min(Σ)`,
/// or `√λ_min(Σ_SS)` on the support of a support cone.
pub fn phi_lower_bound(cone: &ConeSpec, cov: &CovarianceModel) -> Result<f64> {
    match cone {
        ConeSpec::Support { support } => {
            if support.is_empty() || support.iter().any(|&j| j >= cov.dim()) {
                return Err(Error::arg("support must be nonempty and inside the dimension"));
            }
            Ok(cov.matrix.principal_min_eigenvalue(support).sqrt())
        }
        _ => Ok(cov.matrix.min_eigenvalue().sqrt()),
    }
}

/// Lasso cone of vectors with at most `(2C̃ + 1)s` nonzeros.
pub fn sparse_cone_from_counts(s: usize, c_tilde: f64) -> Result<ConeSpec> {
    if !(c_tilde >= 0.0) {
        return Err(Error::arg("sparsity constant must be nonnegative"));
    }
    Ok(ConeSpec::Lasso {
        k: (2.0 * c_tilde + 1.0) * s as f64,
    })
}

/// Group cone of vectors with at most `(2C̃ + 1)s` nonzero groups.
pub fn sparse_group_cone_from_counts(
    s: usize,
    c_tilde: f64,
    groups: GroupStructure,
) -> Result<ConeSpec> {
    if !(c_tilde >= 0.0) {
        return Err(Error::arg("sparsity constant must be nonnegative"));
    }
    Ok(ConeSpec::Group {
        c: (2.0 * c_tilde + 1.0).sqrt(),
        s,
        groups,
    })
}
