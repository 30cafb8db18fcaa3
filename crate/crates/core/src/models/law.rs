//! Finite-support offspring laws and aggregated sampling of i.i.d. sums.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const PMF_TOL: f64 = 1e-12;

/// Largest population coordinate that is still representable (2⁶³ − 1).
pub const OVERFLOW_GUARD: u64 = i64::MAX as u64;

/// Default total population above which offspring sums switch to the
/// Gaussian approximation.
pub const DEFAULT_POPULATION_CEILING: u64 = 1_000_000_000_000;

/// A probability mass function on finitely many non-negative integer
/// vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub struct OffspringLaw {
    support: Vec<Vec<u64>>,
    probs: Vec<f64>,
    // conditional success probabilities for sequential binomial splitting
    split: Vec<f64>,
    mean: Vec<f64>,
    cov: Vec<f64>,
    chol: Vec<f64>,
}

/// Serialized form: `{ support = [[..], ..], probs = [..] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub support: Vec<Vec<u64>>,
    pub probs: Vec<f64>,
}

impl TryFrom<LawSpec> for OffspringLaw {
    type Error = Error;
    fn try_from(s: LawSpec) -> Result<Self> {
        OffspringLaw::new(s.support, s.probs)
    }
}

impl From<OffspringLaw> for LawSpec {
    fn from(l: OffspringLaw) -> Self {
        LawSpec { support: l.support, probs: l.probs }
    }
}

impl OffspringLaw {
    pub fn new(support: Vec<Vec<u64>>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidLaw("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidLaw(format!(
                "{} support vectors but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let d = support[0].len();
        if d == 0 {
            return Err(Error::InvalidLaw("support vectors have length 0".into()));
        }
        if let Some(s) = support.iter().find(|s| s.len() != d) {
            return Err(Error::InvalidLaw(format!(
                "support vector {s:?} has length {}, expected {d}",
                s.len()
            )));
        }
        if let Some((k, s)) = support.iter().enumerate().find(|(_, s)| s.iter().any(|&x| x > OVERFLOW_GUARD)) {
            return Err(Error::InvalidLaw(format!("support vector {k} = {s:?} exceeds 2^63-1")));
        }
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidLaw(format!("probability {k} = {p} is negative or not finite")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {total}, expected 1 within {PMF_TOL:e}"
            )));
        }

        let mut mean = vec![0.0; d];
        for (s, &p) in support.iter().zip(&probs) {
            for (m, &x) in mean.iter_mut().zip(s) {
                *m += p * x as f64;
            }
        }
        let mut cov = vec![0.0; d * d];
        for (s, &p) in support.iter().zip(&probs) {
            for i in 0..d {
                let di = s[i] as f64 - mean[i];
                for j in 0..d {
                    cov[i * d + j] += p * di * (s[j] as f64 - mean[j]);
                }
            }
        }
        let mut split = Vec::with_capacity(probs.len());
        let mut remaining = 1.0;
        for &p in &probs {
            split.push(if remaining > 0.0 { (p / remaining).clamp(0.0, 1.0) } else { 0.0 });
            remaining -= p;
        }
        let chol = psd_cholesky(&cov, d);
        Ok(Self { support, probs, split, mean, cov, chol })
    }

    /// Point mass at `x`.
    pub fn dirac(x: Vec<u64>) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn support(&self) -> &[Vec<u64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major covariance matrix.
    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    /// `wᵀ Γ w` for the covariance `Γ` of this law.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += w[i] * self.cov[i * d + j] * w[j];
            }
        }
        acc
    }

    /// `P(X = 0)` for the whole vector.
    pub fn prob_zero(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(s, _)| s.iter().all(|&x| x == 0))
            .map(|(_, p)| p)
            .sum()
    }

    /// `P(X_j = 0)` for a single coordinate.
    pub fn prob_zero_coord(&self, j: usize) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(s, _)| s[j] == 0)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[u64] {
        let mut t: f64 = rng.random();
        for (s, &p) in self.support.iter().zip(&self.probs) {
            if t < p {
                return s;
            }
            t -= p;
        }
        // rounding: fall back to the last atom with positive mass
        let k = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        &self.support[k]
    }

    /// Adds the sum of `n` independent draws to `out`.
    ///
    /// Atom counts are drawn jointly as a multinomial through sequential
    /// binomial splitting, so the cost does not grow with `n`.
    pub fn add_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R, out: &mut [u64]) -> Result<(), ()> {
        if n == 0 {
            return Ok(());
        }
        let mut remaining = n;
        let last = self.probs.len() - 1;
        for (k, s) in self.support.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let count = if k == last {
                remaining
            } else {
                let q = self.split[k];
                if q <= 0.0 {
                    0
                } else if q >= 1.0 {
                    remaining
                } else {
                    Binomial::new(remaining, q).map_err(|_| ())?.sample(rng)
                }
            };
            remaining -= count;
            if count == 0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(s) {
                let add = count.checked_mul(x).ok_or(())?;
                *o = o.checked_add(add).filter(|&y| y <= OVERFLOW_GUARD).ok_or(())?;
            }
        }
        Ok(())
    }

    /// Adds a Gaussian approximation of the sum of `n` draws to `out`:
    /// `N(n·mean, n·Γ)`, rounded and clamped at zero.
    pub fn add_sum_gaussian<R: Rng + ?Sized>(&self, n: u64, rng: &mut R, out: &mut [u64]) -> Result<(), ()> {
        let d = self.dim();
        let nf = n as f64;
        let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for i in 0..d {
            let noise: f64 = (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum();
            let x = (nf * self.mean[i] + nf.sqrt() * noise).round().max(0.0);
            if !(x < OVERFLOW_GUARD as f64) {
                return Err(());
            }
            out[i] = out[i].checked_add(x as u64).filter(|&y| y <= OVERFLOW_GUARD).ok_or(())?;
        }
        Ok(())
    }

    /// Mixture `(1 - w)·self + w·other` on the union of supports.
    pub fn mix(&self, other: &OffspringLaw, w: f64) -> Result<Self> {
        let mut support = self.support.clone();
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p * (1.0 - w)).collect();
        for (s, &p) in other.support.iter().zip(&other.probs) {
            match support.iter().position(|t| t == s) {
                Some(k) => probs[k] += w * p,
                None => {
                    support.push(s.clone());
                    probs.push(w * p);
                }
            }
        }
        Self::new(support, probs)
    }
}

/// Lower Cholesky factor of a symmetric positive semi-definite matrix;
/// numerically null pivots give zero columns.
pub(crate) fn psd_cholesky(a: &[f64], d: usize) -> Vec<f64> {
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max).max(1.0);
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if diag <= 1e-14 * scale {
            continue;
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    l
}
