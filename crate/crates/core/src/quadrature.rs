//! One-dimensional quadrature: Gauss–Hermite expectations under a normal law
//! and adaptive Gauss–Kronrod integration on finite intervals.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for `∫ f(x) e^{-x²} dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: eigenvalues of the Jacobi matrix with off-diagonal
    /// `sqrt(k/2)`, weights `sqrt(pi) * v_0²`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                ((i.max(j)) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Cached rule of one of the orders 64, 128 or 256.
    pub fn cached(order: usize) -> &'static GaussHermite {
        static R64: OnceLock<GaussHermite> = OnceLock::new();
        static R128: OnceLock<GaussHermite> = OnceLock::new();
        static R256: OnceLock<GaussHermite> = OnceLock::new();
        let cell = match order {
            64 => &R64,
            128 => &R128,
            256 => &R256,
            _ => panic!("no cached Gauss-Hermite rule of order {order}"),
        };
        cell.get_or_init(|| GaussHermite::new(order))
    }

    /// `E f(t)` for `t ~ N(0, sd²)`.
    pub fn normal_expectation(&self, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(scale * x))
            .sum();
        s / std::f64::consts::PI.sqrt()
    }
}

/// `E f(t)` for `t ~ N(0, sd²)`, doubling the Gauss–Hermite order from 64
/// until two consecutive orders agree to `rel_tol`.
pub fn normal_expectation(sd: f64, rel_tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut prev = GaussHermite::cached(64).normal_expectation(sd, &f);
    for order in [128, 256] {
        let next = GaussHermite::cached(order).normal_expectation(sd, &f);
        if (next - prev).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        prev = next;
    }
    prev
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights on the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss estimate.
pub fn gauss_kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration by recursive bisection.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (est, err) = gauss_kronrod15(f, a, b);
        if err <= tol || depth == 0 || (b - a).abs() < 1e-14 {
            return est;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1) + recurse(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, tol, 40)
}
