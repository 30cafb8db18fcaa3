//! Small summary-statistics helpers shared by the Monte Carlo modules.

use serde::{Deserialize, Serialize};

/// Running mean/variance (Welford). Accumulation order is fixed by the
/// caller, which keeps results bit-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean(), se: self.sem() }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::default();
        iter.into_iter().for_each(|x| w.push(x));
        w
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// A proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub fraction: f64,
    pub lower: f64,
    pub upper: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl Proportion {
    /// Wilson 95% score interval.
    pub fn wilson(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self { successes, trials, fraction: f64::NAN, lower: 0.0, upper: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            fraction: p,
            lower: (centre - half).max(0.0).min(p),
            upper: (centre + half).min(1.0).max(p),
        }
    }
}

/// Median of a sample (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 4.0, 7.0, 9.5];
        let w: Welford = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((w.mean() - mean).abs() < 1e-12);
        assert!((w.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn wilson_known_value() {
        // 0 of 100: upper bound z²/(n+z²)
        let p = Proportion::wilson(0, 100);
        assert_eq!(p.lower, 0.0);
        assert!((p.upper - Z95 * Z95 / (100.0 + Z95 * Z95)).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn wilson_contains_point_estimate(n in 1u64..5000, k in 0u64..5000) {
            let k = k % (n + 1);
            let p = Proportion::wilson(k, n);
            prop_assert!(p.lower <= p.fraction && p.fraction <= p.upper);
            prop_assert!(p.lower >= 0.0 && p.upper <= 1.0);
        }
    }
}
