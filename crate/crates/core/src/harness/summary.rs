//! Order statistics and empirical frequencies for experiment summaries.

use serde::Serialize;

/// Linearly interpolated quantile of unsorted data; `None` when empty.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Quantile levels reported in summaries and plot series.
pub const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Quantiles {
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        let q = |level| quantile(values, level);
        Some(Quantiles {
            q10: q(0.1)?,
            q25: q(0.25)?,
            median: q(0.5)?,
            q75: q(0.75)?,
            q90: q(0.9)?,
        })
    }
}

/// Empirical frequency with its binomial standard error `√(r(1-r)/total)`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Frequency {
    pub count: usize,
    pub total: usize,
    pub rate: f64,
    pub se: f64,
}

impl Frequency {
    pub fn of<I: IntoIterator<Item = bool>>(flags: I) -> Option<Self> {
        let (mut count, mut total) = (0, 0);
        for f in flags {
            total += 1;
            count += usize::from(f);
        }
        (total > 0).then(|| {
            let rate = count as f64 / total as f64;
            Frequency {
                count,
                total,
                rate,
                se: (rate * (1.0 - rate) / total as f64).sqrt(),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), Some(2.5));
        assert_eq!(quantile(&v, 0.0), Some(1.0));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert!((quantile(&v, 0.25).unwrap() - 1.75).abs() < 1e-15);
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[7.0]), Some(7.0));
    }

    #[test]
    fn frequency_counts_exactly() {
        let f = Frequency::of([true, false, true, true]).unwrap();
        assert_eq!((f.count, f.total), (3, 4));
        assert_eq!(f.rate, 0.75);
        assert!((f.se - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
        assert!(Frequency::of(std::iter::empty()).is_none());
    }
}
