//! Log-log rate fits.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for an exact fit or three points on a line.
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares fit of `log(metric) = intercept + slope · log(rate)`.
pub fn rate_fit(rates: &[f64], metrics: &[f64]) -> Result<RateFit> {
    if rates.len() != metrics.len() {
        return Err(Error::dims("rate and metric lists differ in length"));
    }
    if rates.len() < 3 {
        return Err(Error::arg(format!("a rate fit needs at least 3 points, got {}", rates.len())));
    }
    if rates.iter().chain(metrics).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::arg("rate fit inputs must be positive and finite"));
    }
    let xs: Vec<f64> = rates.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = metrics.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("rate fit needs at least two distinct rates"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        stderr: (ssr / (k - 2.0) / sxx).sqrt(),
        points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_exact_powers() {
        let rates = [0.4, 0.2, 0.1, 0.05];
        let sq: Vec<f64> = rates.iter().map(|r| r * r).collect();
        let fit = rate_fit(&rates, &sq).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        let slow: Vec<f64> = rates.iter().map(|r: &f64| 3.0 * r.powf(1.5)).collect();
        let fit = rate_fit(&rates, &slow).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_invalid_input() {
        assert!(rate_fit(&[0.1, 0.2], &[0.01, 0.04]).is_err());
        assert!(rate_fit(&[0.1, 0.2, 0.3], &[0.01, 0.0, 0.04]).is_err());
        assert!(rate_fit(&[0.1, 0.1, 0.1], &[0.01, 0.02, 0.04]).is_err());
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(c in 0.1f64..10.0, a in 0.5f64..3.0) {
            let rates = [0.5, 0.3, 0.2, 0.1, 0.07];
            let m: Vec<f64> = rates.iter().map(|r: &f64| r.powf(a) * (1.0 + 0.1 * r)).collect();
            let scaled: Vec<f64> = m.iter().map(|v| c * v).collect();
            let f1 = rate_fit(&rates, &m).unwrap();
            let f2 = rate_fit(&rates, &scaled).unwrap();
            prop_assert!((f1.slope - f2.slope).abs() < 1e-9);
            prop_assert!((f2.intercept - f1.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
