//! Problem instances and synthetic data from the linear and logistic models.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{design_mul, pairwise_sum, SpdMatrix};
use crate::rng::{stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    Ar1 { rho: f64 },
    Explicit,
}

/// Population covariance of the design rows. Diagonal entries are at most 1.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub kind: CovarianceKind,
    pub matrix: SpdMatrix,
}

impl CovarianceModel {
    pub fn identity(p: usize) -> Self {
        CovarianceModel {
            kind: CovarianceKind::Identity,
            matrix: SpdMatrix::identity(p),
        }
    }

    /// `Σ_ij = rho^|i-j|`; `rho = 0` is the identity.
    pub fn ar1(p: usize, rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::arg(format!("ar1 correlation {rho} outside (-1, 1)")));
        }
        if rho == 0.0 {
            return Ok(CovarianceModel {
                kind: CovarianceKind::Ar1 { rho },
                matrix: SpdMatrix::identity(p),
            });
        }
        let m = DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32));
        Ok(CovarianceModel {
            kind: CovarianceKind::Ar1 { rho },
            matrix: SpdMatrix::from_dense(m)?,
        })
    }

    pub fn explicit(matrix: DMatrix<f64>) -> Result<Self> {
        if let Some(j) = (0..matrix.nrows().min(matrix.ncols())).find(|&j| matrix[(j, j)] > 1.0) {
            return Err(Error::arg(format!(
                "diagonal entry {j} is {} > 1",
                matrix[(j, j)]
            )));
        }
        Ok(CovarianceModel {
            kind: CovarianceKind::Explicit,
            matrix: SpdMatrix::from_dense(matrix)?,
        })
    }

    /// Parses `identity` or `ar1:<rho>`.
    pub fn from_spec(spec: &str, p: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec == "identity" {
            return Ok(Self::identity(p));
        }
        if let Some(rho) = spec.strip_prefix("ar1:") {
            let rho: f64 = rho
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad ar1 correlation in '{spec}'")))?;
            return Self::ar1(p, rho);
        }
        Err(Error::Config(format!(
            "unknown covariance '{spec}' (expected identity or ar1:<rho>)"
        )))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.is_identity()
    }
}

/// Contiguous partition of `0..p` into `m` groups of size `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    pub p: usize,
    pub m: usize,
    pub d: usize,
}

impl GroupStructure {
    pub fn contiguous(p: usize, d: usize) -> Result<Self> {
        if d == 0 || p == 0 || !p.is_multiple_of(d) {
            return Err(Error::arg(format!(
                "group size {d} does not divide dimension {p}"
            )));
        }
        Ok(GroupStructure { p, m: p / d, d })
    }

    pub fn group(&self, k: usize) -> std::ops::Range<usize> {
        k * self.d..(k + 1) * self.d
    }

    pub fn iter(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.m).map(|k| self.group(k))
    }

    pub fn group_of(&self, j: usize) -> usize {
        j / self.d
    }

    pub fn block_norm(&self, v: &DVector<f64>, k: usize) -> f64 {
        v.rows(self.group(k).start, self.d).norm()
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub beta_star: DVector<f64>,
    pub support: Vec<usize>,
    pub groups: Option<GroupStructure>,
}

impl GroundTruth {
    pub fn from_vector(beta_star: DVector<f64>, groups: Option<GroupStructure>) -> Self {
        let support = beta_star
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect();
        GroundTruth {
            beta_star,
            support,
            groups,
        }
    }

    /// `value` on the first `s` coordinates.
    pub fn sparse(p: usize, s: usize, value: f64) -> Result<Self> {
        if s > p {
            return Err(Error::arg(format!("sparsity {s} exceeds dimension {p}")));
        }
        let beta = DVector::from_fn(p, |j, _| if j < s { value } else { 0.0 });
        Ok(Self::from_vector(beta, None))
    }

    /// `value` on every coordinate of the first `s` groups.
    pub fn group_sparse(groups: GroupStructure, s: usize, value: f64) -> Result<Self> {
        if s > groups.m {
            return Err(Error::arg(format!(
                "group sparsity {s} exceeds group count {}",
                groups.m
            )));
        }
        let beta = DVector::from_fn(groups.p, |j, _| {
            if groups.group_of(j) < s {
                value
            } else {
                0.0
            }
        });
        Ok(Self::from_vector(beta, Some(groups)))
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn group_sparsity(&self) -> Option<usize> {
        self.groups
            .map(|g| (0..g.m).filter(|&k| g.block_norm(&self.beta_star, k) != 0.0).count())
    }
}

/// Design row law. Both satisfy the subGaussian condition with `L = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Gaussian,
    Rademacher,
}

impl DesignKind {
    pub fn subgaussian_constant(self) -> f64 {
        1.0
    }
}

impl FromStr for DesignKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(DesignKind::Gaussian),
            "rademacher" => Ok(DesignKind::Rademacher),
            other => Err(Error::Config(format!("unknown design kind '{other}'"))),
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignKind::Gaussian => "gaussian",
            DesignKind::Rademacher => "rademacher",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub kind: DesignKind,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub model_kind: ModelKind,
    pub design_kind: DesignKind,
    /// Linear model only.
    pub noise: Option<DVector<f64>>,
    pub noise_sd: Option<f64>,
    pub beta_star: DVector<f64>,
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Rows are drawn in row-major order then multiplied by the symmetric
/// `Σ^{1/2}`, so the identity covariance reproduces the raw draws.
pub fn generate_design(
    cov: &CovarianceModel,
    n: usize,
    kind: DesignKind,
    seed: u64,
) -> Result<Design> {
    if n == 0 {
        return Err(Error::arg("design needs at least one row"));
    }
    let p = cov.dim();
    let mut rng = stream_rng(seed, stream::DESIGN);
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = match kind {
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
    let x = match &cov.matrix {
        SpdMatrix::ScaledIdentity { scale, .. } if *scale == 1.0 => x,
        SpdMatrix::ScaledIdentity { scale, .. } => x * scale.sqrt(),
        SpdMatrix::Dense(d) => x * &d.sqrt,
    };
    Ok(Design { x, kind, seed })
}

fn check_truth(design: &Design, beta_star: &DVector<f64>) -> Result<()> {
    if design.x.ncols() != beta_star.len() {
        return Err(Error::dims(format!(
            "design has {} columns, coefficient vector has {} entries",
            design.x.ncols(),
            beta_star.len()
        )));
    }
    Ok(())
}

/// `y = X β* + ε` with `ε ~ N(0, noise_sd²)` iid, drawn from `seed`.
pub fn generate_linear(
    design: Design,
    beta_star: &DVector<f64>,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    check_truth(&design, beta_star)?;
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::arg(format!("noise standard deviation {noise_sd}")));
    }
    let n = design.x.nrows();
    let mut rng = stream_rng(seed, stream::NOISE);
    let eps = DVector::from_fn(n, |_, _| noise_sd * rng.sample::<f64, _>(StandardNormal));
    let y = design_mul(&design.x, beta_star) + &eps;
    Ok(Dataset {
        x: design.x,
        y,
        model_kind: ModelKind::Linear,
        design_kind: design.kind,
        noise: Some(eps),
        noise_sd: Some(noise_sd),
        beta_star: beta_star.clone(),
        seed,
    })
}

/// Labels with `P(Y = 1 | x) = 1 / (1 + exp(x'β*))`: a large linear score
/// makes the label 0 likely.
pub fn generate_logistic(design: Design, beta_star: &DVector<f64>, seed: u64) -> Result<Dataset> {
    check_truth(&design, beta_star)?;
    let mut rng = stream_rng(seed, stream::LABELS);
    let score = design_mul(&design.x, beta_star);
    let y = score.map(|u| {
        let p1 = 1.0 / (1.0 + u.exp());
        if rng.random::<f64>() < p1 {
            1.0
        } else {
            0.0
        }
    });
    Ok(Dataset {
        x: design.x,
        y,
        model_kind: ModelKind::Logistic,
        design_kind: design.kind,
        noise: None,
        noise_sd: None,
        beta_star: beta_star.clone(),
        seed,
    })
}

/// Logs a warning when `‖Σ^{1/2}β*‖ > 1`, outside the range where the
/// logistic regularity constants are established.
pub fn warn_if_logistic_signal_large(cov: &CovarianceModel, beta_star: &DVector<f64>) -> bool {
    let norm = cov.matrix.norm(beta_star);
    if norm > 1.0 {
        log::warn!("logistic signal strength {norm:.4} exceeds 1; regularity constants may not hold");
        return true;
    }
    false
}

/// Realized noise scale `sqrt(Σ ε_i² / n)`.
pub fn sigma_star(dataset: &Dataset) -> Result<f64> {
    let eps = dataset.noise.as_ref().ok_or_else(|| {
        Error::Unsupported("the realized noise scale needs a linear dataset with stored noise".into())
    })?;
    let sq: Vec<f64> = eps.iter().map(|e| e * e).collect();
    Ok((pairwise_sum(&sq) / eps.len() as f64).sqrt())
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    n: usize,
    p: usize,
    model_kind: ModelKind,
    design_kind: DesignKind,
    seed: u64,
    noise_sd: Option<f64>,
    beta_star: Vec<f64>,
}

impl Dataset {
    /// Writes `meta.json`, `X.bin` (row-major), `y.bin` and, for the linear
    /// model, `eps.bin`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = DatasetMeta {
            n: self.n(),
            p: self.p(),
            model_kind: self.model_kind,
            design_kind: self.design_kind,
            seed: self.seed,
            noise_sd: self.noise_sd,
            beta_star: self.beta_star.iter().copied().collect(),
        };
        let meta_path = dir.join("meta.json");
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
            .map_err(|e| Error::io(&meta_path, e))?;
        io::write_matrix(&dir.join("X.bin"), &self.x)?;
        io::write_vector(&dir.join("y.bin"), &self.y)?;
        if let Some(eps) = &self.noise {
            io::write_vector(&dir.join("eps.bin"), eps)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text)?;
        if meta.beta_star.len() != meta.p {
            return Err(Error::Format {
                path: meta_path,
                reason: format!("beta_star has {} entries, p = {}", meta.beta_star.len(), meta.p),
            });
        }
        let x = io::read_matrix(&dir.join("X.bin"), meta.n, meta.p)?;
        let y = io::read_vector(&dir.join("y.bin"), meta.n)?;
        let noise = match meta.model_kind {
            ModelKind::Linear => Some(io::read_vector(&dir.join("eps.bin"), meta.n)?),
            ModelKind::Logistic => None,
        };
        Ok(Dataset {
            x,
            y,
            model_kind: meta.model_kind,
            design_kind: meta.design_kind,
            noise,
            noise_sd: meta.noise_sd,
            beta_star: DVector::from_vec(meta.beta_star),
            seed: meta.seed,
        })
    }
}
