//! Dense linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A symmetric positive definite matrix together with its square root and
/// inverse square root.
///
/// Multiples of the identity are kept symbolic so that isotropic problems at
/// `p` in the thousands never form or factor a `p x p` matrix.
#[derive(Debug, Clone)]
pub enum SpdMatrix {
    ScaledIdentity { dim: usize, scale: f64 },
    Dense(Box<DenseSpd>),
}

#[derive(Debug, Clone)]
pub struct DenseSpd {
    pub matrix: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl SpdMatrix {
    pub fn identity(dim: usize) -> Self {
        SpdMatrix::ScaledIdentity { dim, scale: 1.0 }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::NotPositiveDefinite(format!(
                "scaled identity with scale {scale}"
            )));
        }
        Ok(SpdMatrix::ScaledIdentity { dim, scale })
    }

    /// Factors a dense symmetric matrix. A matrix that is exactly `c * I` is
    /// stored symbolically.
    pub fn from_dense(matrix: DMatrix<f64>) -> Result<Self> {
        let p = matrix.nrows();
        if matrix.ncols() != p {
            return Err(Error::dims(format!(
                "expected a square matrix, got {}x{}",
                p,
                matrix.ncols()
            )));
        }
        if p == 0 {
            return Err(Error::arg("empty matrix"));
        }
        let scale = matrix.abs().max().max(f64::MIN_POSITIVE);
        for i in 0..p {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotPositiveDefinite(format!(
                        "asymmetric entries at ({i}, {j})"
                    )));
                }
            }
        }
        let c = matrix[(0, 0)];
        let is_scaled_identity = (0..p).all(|i| {
            (0..p).all(|j| matrix[(i, j)] == if i == j { c } else { 0.0 })
        });
        if is_scaled_identity {
            return Self::scaled_identity(p, c);
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min > 0.0) || min <= max * 1e-14 {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {min:e} (largest {max:e})"
            )));
        }
        let v = &eig.eigenvectors;
        let spectral = |f: &dyn Fn(f64) -> f64| {
            let d = DVector::from_iterator(p, eig.eigenvalues.iter().map(|&l| f(l)));
            let scaled = DMatrix::from_fn(p, p, |i, j| v[(i, j)] * d[j]);
            let m = &scaled * v.transpose();
            (&m + m.transpose()) * 0.5
        };
        let sqrt = spectral(&|l| l.sqrt());
        let inv_sqrt = spectral(&|l| 1.0 / l.sqrt());
        let inverse = spectral(&|l| 1.0 / l);
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        Ok(SpdMatrix::Dense(Box::new(DenseSpd {
            matrix: sym,
            sqrt,
            inv_sqrt,
            inverse,
            eigenvalues,
        })))
    }

    pub fn dim(&self) -> usize {
        match self {
            SpdMatrix::ScaledIdentity { dim, .. } => *dim,
            SpdMatrix::Dense(d) => d.matrix.nrows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, SpdMatrix::ScaledIdentity { scale, .. } if *scale == 1.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SpdMatrix::ScaledIdentity { dim, scale } => DMatrix::identity(*dim, *dim) * *scale,
            SpdMatrix::Dense(d) => d.matrix.clone(),
        }
    }

    pub fn sqrt_dense(&self) -> DMatrix<f64> {
        match self {
            SpdMatrix::ScaledIdentity { dim, scale } => {
                DMatrix::identity(*dim, *dim) * scale.sqrt()
            }
            SpdMatrix::Dense(d) => d.sqrt.clone(),
        }
    }

    pub fn inverse_dense(&self) -> DMatrix<f64> {
        match self {
            SpdMatrix::ScaledIdentity { dim, scale } => DMatrix::identity(*dim, *dim) / *scale,
            SpdMatrix::Dense(d) => d.inverse.clone(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => {
                if i == j {
                    *scale
                } else {
                    0.0
                }
            }
            SpdMatrix::Dense(d) => d.matrix[(i, j)],
        }
    }

    pub fn mul(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => v * *scale,
            SpdMatrix::Dense(d) => &d.matrix * v,
        }
    }

    pub fn sqrt_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => v * scale.sqrt(),
            SpdMatrix::Dense(d) => &d.sqrt * v,
        }
    }

    pub fn inv_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => v / *scale,
            SpdMatrix::Dense(d) => &d.inverse * v,
        }
    }

    pub fn inv_sqrt_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => v / scale.sqrt(),
            SpdMatrix::Dense(d) => &d.inv_sqrt * v,
        }
    }

    /// `v' M v`
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => scale * v.norm_squared(),
            SpdMatrix::Dense(_) => self.sqrt_mul(v).norm_squared(),
        }
    }

    /// `||M^{1/2} v||`
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.quad_form(v).sqrt()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => *scale,
            SpdMatrix::Dense(d) => d.eigenvalues[0],
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => *scale,
            SpdMatrix::Dense(d) => *d.eigenvalues.last().unwrap(),
        }
    }

    /// Smallest eigenvalue of the principal submatrix on `indices`.
    pub fn principal_min_eigenvalue(&self, indices: &[usize]) -> f64 {
        match self {
            SpdMatrix::ScaledIdentity { scale, .. } => *scale,
            SpdMatrix::Dense(d) => {
                let k = indices.len();
                let sub = DMatrix::from_fn(k, k, |a, b| d.matrix[(indices[a], indices[b])]);
                SymmetricEigen::new(sub).eigenvalues.min()
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        match self {
            SpdMatrix::ScaledIdentity { dim, scale } => Self::scaled_identity(*dim, scale * c),
            SpdMatrix::Dense(d) => {
                if !(c > 0.0) {
                    return Err(Error::NotPositiveDefinite(format!("scaling by {c}")));
                }
                let rs = c.sqrt();
                Ok(SpdMatrix::Dense(Box::new(DenseSpd {
                    matrix: &d.matrix * c,
                    sqrt: &d.sqrt * rs,
                    inv_sqrt: &d.inv_sqrt / rs,
                    inverse: &d.inverse / c,
                    eigenvalues: d.eigenvalues.iter().map(|l| l * c).collect(),
                })))
            }
        }
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration from a fixed pseudo-random start.
pub fn power_iteration(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    dim: usize,
    tol: f64,
    max_iters: usize,
) -> f64 {
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    let mut v = DVector::from_fn(dim, |_, _| {
        state = crate::rng::mix64(state);
        0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
    });
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `X v`, touching only the columns where `v` is nonzero.
pub fn design_mul(x: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(x.nrows());
    for (j, &vj) in v.iter().enumerate() {
        if vj != 0.0 {
            out.axpy(vj, &x.column(j), 1.0);
        }
    }
    out
}

/// `X' r`
pub fn design_tr_mul(x: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.dot(r)))
}

pub fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn linf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(p: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()))
    }

    #[test]
    fn dense_factors_are_consistent() {
        let m = ar1(6, 0.6);
        let spd = SpdMatrix::from_dense(m.clone()).unwrap();
        let SpdMatrix::Dense(d) = &spd else {
            panic!("expected dense")
        };
        let id = DMatrix::<f64>::identity(6, 6);
        assert!((&d.sqrt * &d.sqrt - &m).norm() <= 1e-10 * m.norm());
        assert!((&m * &d.inverse - &id).norm() <= 1e-10);
        assert!((&d.inv_sqrt * &d.sqrt - &id).norm() <= 1e-10);
        let v = DVector::from_fn(6, |i, _| i as f64 - 2.5);
        assert!((spd.quad_form(&v) - v.dot(&(&m * &v))).abs() < 1e-10);
    }

    #[test]
    fn identity_is_detected() {
        let spd = SpdMatrix::from_dense(ar1(5, 0.0)).unwrap();
        assert!(spd.is_identity());
        let scaled = SpdMatrix::from_dense(DMatrix::identity(3, 3) * 0.25).unwrap();
        assert!(matches!(scaled, SpdMatrix::ScaledIdentity { scale, .. } if scale == 0.25));
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let mut m = DMatrix::identity(3, 3);
        m[(2, 2)] = -1.0;
        assert!(matches!(
            SpdMatrix::from_dense(m),
            Err(Error::NotPositiveDefinite(_))
        ));
        let mut a = DMatrix::identity(3, 3);
        a[(0, 1)] = 0.3;
        assert!(SpdMatrix::from_dense(a).is_err());
    }

    #[test]
    fn power_iteration_matches_eigensolver() {
        let m = ar1(8, 0.7);
        let spd = SpdMatrix::from_dense(m.clone()).unwrap();
        let top = power_iteration(|v| &m * v, 8, 1e-14, 10_000);
        assert!((top - spd.max_eigenvalue()).abs() < 1e-9);
    }

    #[test]
    fn sparse_design_product_matches_dense() {
        let x = DMatrix::from_fn(5, 4, |i, j| (i * 4 + j) as f64 * 0.1 - 0.7);
        let v = DVector::from_vec(vec![0.0, 1.5, 0.0, -2.0]);
        assert!((design_mul(&x, &v) - &x * &v).norm() < 1e-14);
        let r = DVector::from_fn(5, |i, _| i as f64);
        assert!((design_tr_mul(&x, &r) - x.transpose() * &r).norm() < 1e-12);
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs: Vec<f64> = (0..10_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
