//! Consequences of the first-order expansion that can be checked on a
//! simulated dataset: the exact risk identity, de-biased linear functionals,
//! sparsity of the expansion, and pointwise empirical-process quantities.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{design_mul, mean_and_se, pairwise_sum};
use crate::loss::{curvature_lower_bound, taylor_remainder_coefficient, CurvatureMatrix, LossKind};
use crate::model::{sigma_star, CovarianceModel, Dataset, DesignKind, GroupStructure, ModelKind};
use crate::penalty::{soft_threshold, PenaltySpec};
use crate::quadrature;
use crate::rng::{stream, stream_rng};

/// `E_Z ‖β* - prox_h(β* + σ* Z / √n)‖²` by Monte Carlo, with standard error.
pub fn mc_prox_risk(
    penalty: &PenaltySpec,
    beta_star: &DVector<f64>,
    sigma_star: f64,
    n: usize,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    penalty.validate(beta_star.len())?;
    if n == 0 || n_mc == 0 {
        return Err(Error::arg("need n >= 1 and n_mc >= 1"));
    }
    let tau = sigma_star / (n as f64).sqrt();
    let p = beta_star.len();
    let mut rng = stream_rng(seed, stream::MONTE_CARLO);
    let draws: Vec<f64> = (0..n_mc)
        .map(|_| {
            let point = DVector::from_fn(p, |j, _| beta_star[j] + tau * rng.sample::<f64, _>(StandardNormal));
            (penalty.prox_unchecked(&point, 1.0) - beta_star).norm_squared()
        })
        .collect();
    Ok(mean_and_se(&draws))
}

/// `Σ_j E[(soft_threshold(θ_j + τ g, λ) - θ_j)²]`, `τ = σ*/√n`, each term by
/// adaptive quadrature against the standard normal density on `[-12, 12]`.
pub fn l1_prox_risk_quadrature(lambda: f64, beta_star: &DVector<f64>, sigma_star: f64, n: usize) -> f64 {
    let tau = sigma_star / (n as f64).sqrt();
    let term = |theta: f64| -> f64 {
        let loss = |g: f64| {
            let e = soft_threshold(theta + tau * g, lambda) - theta;
            e * e
        };
        if tau == 0.0 {
            return loss(0.0);
        }
        let density = |g: f64| (-0.5 * g * g).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut cuts = vec![-12.0, 12.0];
        for k in [(-lambda - theta) / tau, (lambda - theta) / tau] {
            if k > -12.0 && k < 12.0 {
                cuts.push(k);
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.windows(2)
            .map(|w| quadrature::integrate(|g| loss(g) * density(g), w[0], w[1], 1e-14))
            .sum()
    };
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let terms: Vec<f64> = beta_star
        .iter()
        .map(|&theta| *cache.entry(theta.to_bits()).or_insert_with(|| term(theta)))
        .collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskIdentityReport {
    /// `‖β̂ - β*‖`
    pub lhs: f64,
    /// Square root of the Monte Carlo prox-risk.
    pub rhs: f64,
    /// Standard error of `rhs` by the delta method.
    pub mc_se: f64,
    /// `lhs / rhs`, when `rhs > 0`.
    pub ratio: Option<f64>,
    /// `σ* (t + 1) / √n`
    pub noise_term: f64,
    /// `‖β̂ - η‖`
    pub expansion_term: f64,
    /// `|lhs - rhs| ≤ noise_term + expansion_term`
    pub bound_holds: bool,
}

/// Compares `‖β̂ - β*‖` with the root prox-risk of the sequence model. Only
/// linear data from an isotropic Gaussian design qualify.
#[allow(clippy::too_many_arguments)]
pub fn risk_identity_check(
    dataset: &Dataset,
    cov: &CovarianceModel,
    beta_hat: &DVector<f64>,
    eta: &DVector<f64>,
    penalty: &PenaltySpec,
    n_mc: usize,
    seed: u64,
    t: f64,
) -> Result<RiskIdentityReport> {
    if !cov.is_identity() {
        return Err(Error::Unsupported(
            "the exact risk identity requires the identity covariance".into(),
        ));
    }
    if dataset.design_kind != DesignKind::Gaussian {
        return Err(Error::Unsupported("the exact risk identity requires a gaussian design".into()));
    }
    if dataset.model_kind != ModelKind::Linear {
        return Err(Error::Unsupported("the exact risk identity requires the linear model".into()));
    }
    if beta_hat.len() != dataset.p() || eta.len() != dataset.p() {
        return Err(Error::dims("estimates must have one entry per design column"));
    }
    let n = dataset.n();
    let sigma = sigma_star(dataset)?;
    let lhs = (beta_hat - &dataset.beta_star).norm();
    let (risk, se) = mc_prox_risk(penalty, &dataset.beta_star, sigma, n, n_mc, seed)?;
    let rhs = risk.max(0.0).sqrt();
    let mc_se = if rhs > 0.0 { se / (2.0 * rhs) } else { 0.0 };
    let noise_term = sigma * (t + 1.0) / (n as f64).sqrt();
    let expansion_term = (beta_hat - eta).norm();
    Ok(RiskIdentityReport {
        lhs,
        rhs,
        mc_se,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        noise_term,
        expansion_term,
        bound_holds: (lhs - rhs).abs() <= noise_term + expansion_term,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InferenceReport {
    pub theta_hat: f64,
    /// `aᵀβ*` for the normalized direction.
    pub target: f64,
    pub ci: (f64, f64),
    pub covered: bool,
    /// `√n (θ̂ - aᵀβ*)`
    pub t_stat: f64,
    /// `√n z_aᵀε / ‖z_a‖²`, available for linear data.
    pub oracle_statistic: Option<f64>,
    /// `t_stat - oracle_statistic`
    pub remainder: Option<f64>,
    /// `‖Σ^{-1/2} a‖` of the direction as supplied.
    pub direction_scale: f64,
}

/// De-biased estimate of `aᵀβ*` with a 95% interval, after rescaling `a` to
/// `‖Σ^{-1/2} a‖ = 1`.
pub fn debiased_estimate(
    dataset: &Dataset,
    beta_hat: &DVector<f64>,
    cov: &CovarianceModel,
    a: &DVector<f64>,
) -> Result<InferenceReport> {
    let p = dataset.p();
    if a.len() != p || beta_hat.len() != p || cov.dim() != p {
        return Err(Error::dims("direction, estimate and covariance must match the design"));
    }
    let scale = cov.matrix.inv_sqrt_mul(a).norm();
    if scale == 0.0 {
        return Err(Error::arg("direction must be nonzero"));
    }
    let a = a / scale;
    let za = design_mul(&dataset.x, &cov.matrix.inv_mul(&a));
    let za2 = za.norm_squared();
    let resid = &dataset.y - design_mul(&dataset.x, beta_hat);
    let theta_hat = a.dot(beta_hat) + za.dot(&resid) / za2;
    let target = a.dot(&dataset.beta_star);
    let root_n = (dataset.n() as f64).sqrt();
    let half = 1.96 / root_n;
    let ci = (theta_hat - half, theta_hat + half);
    let t_stat = root_n * (theta_hat - target);
    let oracle_statistic = dataset.noise.as_ref().map(|eps| root_n * za.dot(eps) / za2);
    Ok(InferenceReport {
        theta_hat,
        target,
        ci,
        covered: ci.0 <= target && target <= ci.1,
        t_stat,
        oracle_statistic,
        remainder: oracle_statistic.map(|o| t_stat - o),
        direction_scale: scale,
    })
}

/// Nonzero coordinates and nonzero groups. Without a group structure every
/// coordinate is its own group.
pub fn sparsity_count(beta: &DVector<f64>, groups: Option<&GroupStructure>) -> (usize, usize) {
    let coords = beta.iter().filter(|&&v| v != 0.0).count();
    let nonzero_groups = match groups {
        Some(g) => g.iter().filter(|r| beta.as_slice()[r.clone()].iter().any(|&v| v != 0.0)).count(),
        None => coords,
    };
    (coords, nonzero_groups)
}

/// `C̃ = 1 + C_max {2(3 + ξ)(1 + 1/ξ)}² B3² / φ²`
pub fn sparsity_constant(c_max: f64, xi: f64, b3: f64, phi: f64) -> Result<f64> {
    if !(c_max > 0.0 && xi > 0.0 && b3 > 0.0 && phi > 0.0) {
        return Err(Error::arg("sparsity constant inputs must be positive"));
    }
    let inner = 2.0 * (3.0 + xi) * (1.0 + 1.0 / xi);
    Ok(1.0 + c_max * inner * inner * b3 * b3 / (phi * phi))
}

/// Pointwise evaluation of the empirical curvature `K̂ = n⁻¹ Σ ℓ''(y_i, x_i'β*) x_i x_i'`
/// against `K`.
pub struct ProcessEvaluator<'a> {
    dataset: &'a Dataset,
    k: &'a CurvatureMatrix,
    weights: DVector<f64>,
}

impl<'a> ProcessEvaluator<'a> {
    pub fn new(
        dataset: &'a Dataset,
        loss: LossKind,
        k: &'a CurvatureMatrix,
        beta_star: &DVector<f64>,
    ) -> Result<Self> {
        if k.dim() != dataset.p() || beta_star.len() != dataset.p() {
            return Err(Error::dims("curvature and coefficients must match the design"));
        }
        let u = design_mul(&dataset.x, beta_star);
        let weights = DVector::from_iterator(
            dataset.n(),
            dataset.y.iter().zip(u.iter()).map(|(&y, &u)| loss.d2(y, u)),
        );
        Ok(ProcessEvaluator { dataset, k, weights })
    }

    fn nonzero(u: &DVector<f64>) -> Result<()> {
        if u.iter().all(|&v| v == 0.0) {
            return Err(Error::arg("direction must be nonzero"));
        }
        Ok(())
    }

    fn empirical_form(&self, xu: &DVector<f64>, xv: &DVector<f64>) -> f64 {
        let terms: Vec<f64> = (0..xu.len()).map(|i| self.weights[i] * (xu[i] * xv[i])).collect();
        pairwise_sum(&terms) / self.dataset.n() as f64
    }

    /// `|uᵀK̂u / ‖u‖_K² - 1|`
    pub fn q1(&self, u: &DVector<f64>) -> Result<f64> {
        Self::nonzero(u)?;
        let xu = design_mul(&self.dataset.x, u);
        Ok((self.empirical_form(&xu, &xu) / self.k.matrix.quad_form(u) - 1.0).abs())
    }

    /// `|uᵀ(K̂ - K)v| / (‖u‖_K ‖v‖_K)`, symmetric in `(u, v)` bit for bit.
    pub fn q2(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Self::nonzero(u)?;
        Self::nonzero(v)?;
        let xu = design_mul(&self.dataset.x, u);
        let xv = design_mul(&self.dataset.x, v);
        let ru = self.k.matrix.sqrt_mul(u);
        let rv = self.k.matrix.sqrt_mul(v);
        let population: f64 = pairwise_sum(&ru.iter().zip(rv.iter()).map(|(a, b)| a * b).collect::<Vec<_>>());
        let diff = self.empirical_form(&xu, &xv) - population;
        Ok(diff.abs() / (ru.norm() * rv.norm()))
    }

    /// `n⁻¹ Σ |x_i'u|³ / ‖u‖_K³`
    pub fn z(&self, u: &DVector<f64>) -> Result<f64> {
        Self::nonzero(u)?;
        let xu = design_mul(&self.dataset.x, u);
        let cubes: Vec<f64> = xu.iter().map(|v| v.abs().powi(3)).collect();
        let norm = self.k.norm(u);
        Ok(pairwise_sum(&cubes) / self.dataset.n() as f64 / (norm * norm * norm))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcessQuantities {
    pub q1: Vec<f64>,
    pub z: Vec<f64>,
    /// `q2[i][j]` for directions `i` and `j`.
    pub q2: Vec<Vec<f64>>,
}

/// `q1`, `z` for each direction and `q2` for each pair.
pub fn process_quantities(
    dataset: &Dataset,
    loss: LossKind,
    k: &CurvatureMatrix,
    beta_star: &DVector<f64>,
    directions: &[DVector<f64>],
) -> Result<ProcessQuantities> {
    let ev = ProcessEvaluator::new(dataset, loss, k, beta_star)?;
    let q1 = directions.iter().map(|u| ev.q1(u)).collect::<Result<Vec<_>>>()?;
    let z = directions.iter().map(|u| ev.z(u)).collect::<Result<Vec<_>>>()?;
    let q2 = directions
        .iter()
        .map(|u| directions.iter().map(|v| ev.q2(u, v)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ProcessQuantities { q1, z, q2 })
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorReport {
    /// `max_i |a_i(β)|`
    pub max_abs: f64,
    /// `max_i (|a_i(β)| - B |x_i'(β - β*)|)`; nonpositive when the Lipschitz
    /// bound holds.
    pub violation: f64,
}

/// Integrated second-derivative increments
/// `a_i(β) = ∫_0^1 [ℓ''(x_i'β* + t x_i'(β - β*)) - ℓ''(x_i'β*)] dt`.
pub fn taylor_remainder(
    dataset: &Dataset,
    loss: LossKind,
    beta: &DVector<f64>,
    beta_star: &DVector<f64>,
) -> Result<TaylorReport> {
    if beta.len() != dataset.p() || beta_star.len() != dataset.p() {
        return Err(Error::dims("coefficients must match the design"));
    }
    let base = design_mul(&dataset.x, beta_star);
    let delta = design_mul(&dataset.x, &(beta - beta_star));
    let b = loss.lipschitz_d2();
    let mut max_abs = 0.0f64;
    let mut violation = f64::NEG_INFINITY;
    for i in 0..dataset.n() {
        let a = taylor_remainder_coefficient(loss, dataset.y[i], base[i], delta[i]);
        max_abs = max_abs.max(a.abs());
        violation = violation.max(a.abs() - b * delta[i].abs());
    }
    Ok(TaylorReport { max_abs, violation })
}

#[derive(Debug, Clone, Serialize)]
pub struct RscReport {
    /// Second-order remainder of the empirical risk at `β*` in direction `u`,
    /// divided by `‖u‖_K²`.
    pub theta_sq: f64,
    pub k_norm: f64,
    /// `‖u‖_K ≤ 1`, the range where restricted strong convexity is posed.
    pub within_unit_ball: bool,
    /// `½ α(τ) (n⁻¹‖Xu‖²) / ‖u‖_K²` with `τ` the largest `|x_i'β|` over both
    /// endpoints; a lower bound on `theta_sq`.
    pub curvature_floor: f64,
}

pub fn rsc_empirical(
    dataset: &Dataset,
    loss: LossKind,
    k: &CurvatureMatrix,
    beta_star: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<RscReport> {
    if u.len() != dataset.p() || beta_star.len() != dataset.p() || k.dim() != dataset.p() {
        return Err(Error::dims("direction, coefficients and curvature must match the design"));
    }
    if u.iter().all(|&v| v == 0.0) {
        return Err(Error::arg("direction must be nonzero"));
    }
    let n = dataset.n() as f64;
    let base = design_mul(&dataset.x, beta_star);
    let xu = design_mul(&dataset.x, u);
    let terms: Vec<f64> = (0..dataset.n())
        .map(|i| loss.bregman(dataset.y[i], base[i], xu[i]))
        .collect();
    let remainder = pairwise_sum(&terms) / n;
    let k2 = k.matrix.quad_form(u);
    let tau = (0..dataset.n())
        .map(|i| base[i].abs().max((base[i] + xu[i]).abs()))
        .fold(0.0, f64::max);
    let sq: Vec<f64> = xu.iter().map(|v| v * v).collect();
    let floor = 0.5 * curvature_lower_bound(loss, tau)? * pairwise_sum(&sq) / n / k2;
    Ok(RscReport {
        theta_sq: remainder / k2,
        k_norm: k2.sqrt(),
        within_unit_ball: k2 <= 1.0,
        curvature_floor: floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;
    use crate::loss::{curvature_matrix, CurvatureProvenance};
    use crate::model::{generate_design, generate_linear, generate_logistic};

    fn identity_k(p: usize) -> CurvatureMatrix {
        CurvatureMatrix {
            matrix: SpdMatrix::identity(p),
            provenance: CurvatureProvenance::ExactSigma,
        }
    }

    fn linear(n: usize, p: usize, seed: u64, noise: f64) -> Dataset {
        let cov = CovarianceModel::identity(p);
        let beta = DVector::from_fn(p, |j, _| if j < 2 { 1.0 } else { 0.0 });
        let d = generate_design(&cov, n, DesignKind::Gaussian, seed).unwrap();
        generate_linear(d, &beta, noise, seed + 1).unwrap()
    }

    #[test]
    fn prox_risk_limits() {
        let beta = DVector::from_vec(vec![1.0, 0.0, -2.0]);
        let (r, _) = mc_prox_risk(&PenaltySpec::L1 { lambda: 0.0 }, &beta, 1.0, 100, 4000, 1).unwrap();
        let mut rng = stream_rng(1, stream::MONTE_CARLO);
        let direct: Vec<f64> = (0..4000)
            .map(|_| (0..3).map(|_| (0.1 * rng.sample::<f64, _>(StandardNormal)).powi(2)).sum())
            .collect();
        assert!((r - mean_and_se(&direct).0).abs() < 1e-15);
        assert!((l1_prox_risk_quadrature(0.0, &beta, 1.0, 100) - 0.03).abs() < 1e-12);
        let (big, _) = mc_prox_risk(&PenaltySpec::L1 { lambda: 1e6 }, &beta, 1.0, 100, 100, 1).unwrap();
        assert_eq!(big, 5.0);
    }

    #[test]
    fn prox_risk_quadrature_matches_monte_carlo() {
        let beta = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let pen = PenaltySpec::L1 { lambda: 0.2 };
        let (mc, se) = mc_prox_risk(&pen, &beta, 1.0, 100, 1_000_000, 7).unwrap();
        let q = l1_prox_risk_quadrature(0.2, &beta, 1.0, 100);
        assert!((mc - q).abs() <= 3.0 * se, "{mc} vs {q} (se {se})");
    }

    #[test]
    fn risk_identity_refusals_and_noiseless_case() {
        let ds = linear(50, 4, 3, 0.0);
        let beta = ds.beta_star.clone();
        let pen = PenaltySpec::L1 { lambda: 0.0 };
        let cov = CovarianceModel::identity(4);
        let rep = risk_identity_check(&ds, &cov, &beta, &beta, &pen, 100, 1, 2.0).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
        assert!(rep.ratio.is_none() && rep.bound_holds);
        let ar = CovarianceModel::ar1(4, 0.2).unwrap();
        assert!(matches!(
            risk_identity_check(&ds, &ar, &beta, &beta, &pen, 10, 1, 2.0),
            Err(Error::Unsupported(_))
        ));
        let mut rad = ds.clone();
        rad.design_kind = DesignKind::Rademacher;
        assert!(risk_identity_check(&rad, &cov, &beta, &beta, &pen, 10, 1, 2.0).is_err());
    }

    #[test]
    fn debiasing_at_the_truth_is_the_noise_projection() {
        let ds = linear(80, 5, 4, 1.0);
        let cov = CovarianceModel::identity(5);
        let a = DVector::from_fn(5, |j, _| if j == 0 { 1.0 } else { 0.0 });
        let rep = debiased_estimate(&ds, &ds.beta_star, &cov, &a).unwrap();
        let za = ds.x.column(0).into_owned();
        let eps = ds.noise.as_ref().unwrap();
        let expected = za.dot(eps) / za.norm_squared();
        assert!((rep.theta_hat - rep.target - expected).abs() < 1e-13);
        assert!(rep.remainder.unwrap().abs() < 1e-11);
        assert_eq!(rep.covered, rep.ci.0 <= rep.target && rep.target <= rep.ci.1);
        assert!(debiased_estimate(&ds, &ds.beta_star, &cov, &DVector::zeros(5)).is_err());
    }

    #[test]
    fn sparsity_examples() {
        let g = GroupStructure::contiguous(4, 2).unwrap();
        assert_eq!(sparsity_count(&DVector::zeros(4), Some(&g)), (0, 0));
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0, 2.0]);
        assert_eq!(sparsity_count(&b, Some(&g)), (2, 2));
        assert_eq!(sparsity_constant(1.0, 1.0, 1.0, 1.0).unwrap(), 257.0);
        let base = sparsity_constant(1.0, 0.5, 1.0, 2.0).unwrap() - 1.0;
        let doubled = sparsity_constant(1.0, 0.5, 2.0, 2.0).unwrap() - 1.0;
        assert!((doubled - 4.0 * base).abs() < 1e-9);
        assert!((sparsity_constant(1.0, 1.0, 1.0, 1e9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q2_is_symmetric_and_matches_q1_on_the_diagonal() {
        let ds = linear(60, 6, 5, 1.0);
        let k = identity_k(6);
        let u = DVector::from_fn(6, |j, _| (j as f64 - 2.5) * 0.3);
        let v = DVector::from_fn(6, |j, _| ((j * j) as f64).sin());
        let ev = ProcessEvaluator::new(&ds, LossKind::Squared, &k, &ds.beta_star).unwrap();
        assert_eq!(ev.q2(&u, &v).unwrap(), ev.q2(&v, &u).unwrap());
        assert!((ev.q2(&u, &u).unwrap() - ev.q1(&u).unwrap()).abs() < 1e-12);
        assert!(ev.q1(&DVector::zeros(6)).is_err());
    }

    #[test]
    fn third_moment_of_gaussian_design() {
        let mut zs = Vec::new();
        for rep in 0..50 {
            let ds = linear(2000, 2, 100 + rep, 1.0);
            let k = identity_k(2);
            let ev = ProcessEvaluator::new(&ds, LossKind::Squared, &k, &ds.beta_star).unwrap();
            zs.push(ev.z(&DVector::from_vec(vec![1.0, 0.0])).unwrap());
        }
        let (m, se) = mean_and_se(&zs);
        let target = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((m - target).abs() <= 3.0 * se, "{m} vs {target} (se {se})");
    }

    #[test]
    fn taylor_bound_for_logistic() {
        let cov = CovarianceModel::identity(3);
        let beta = DVector::from_vec(vec![0.5, -0.5, 0.0]);
        let d = generate_design(&cov, 200, DesignKind::Gaussian, 9).unwrap();
        let ds = generate_logistic(d, &beta, 10).unwrap();
        let other = DVector::from_vec(vec![2.0, 1.0, -3.0]);
        let rep = taylor_remainder(&ds, LossKind::Logistic, &other, &beta).unwrap();
        assert!(rep.violation <= 1e-10);
        let same = taylor_remainder(&ds, LossKind::Logistic, &beta, &beta).unwrap();
        assert_eq!(same.max_abs, 0.0);
        let sq = taylor_remainder(&ds, LossKind::Squared, &other, &beta).unwrap();
        assert_eq!(sq.max_abs, 0.0);
    }

    #[test]
    fn rsc_for_squared_loss_is_half_the_rayleigh_quotient() {
        let ds = linear(400, 3, 11, 1.0);
        let k = identity_k(3);
        let u = DVector::from_vec(vec![0.2, -0.1, 0.3]);
        let r = rsc_empirical(&ds, LossKind::Squared, &k, &ds.beta_star, &u).unwrap();
        let xu = &ds.x * &u;
        let expected = 0.5 * xu.norm_squared() / 400.0 / u.norm_squared();
        assert!((r.theta_sq - expected).abs() < 1e-12);
        let r2 = rsc_empirical(&ds, LossKind::Squared, &k, &ds.beta_star, &(&u * 7.0)).unwrap();
        assert!((r2.theta_sq - r.theta_sq).abs() < 1e-12);
        assert!(r.within_unit_ball && !r2.within_unit_ball);
    }

    #[test]
    fn logistic_rsc_exceeds_curvature_floor() {
        let cov = CovarianceModel::identity(4);
        let beta = DVector::from_vec(vec![0.5, 0.5, 0.0, 0.0]);
        let k = curvature_matrix(LossKind::Logistic, &cov, &beta, DesignKind::Gaussian).unwrap();
        let d = generate_design(&cov, 300, DesignKind::Gaussian, 12).unwrap();
        let ds = generate_logistic(d, &beta, 13).unwrap();
        let u = DVector::from_vec(vec![0.05, -0.02, 0.01, 0.03]);
        let r = rsc_empirical(&ds, LossKind::Logistic, &k, &beta, &u).unwrap();
        assert!(r.theta_sq >= r.curvature_floor);
    }
}
