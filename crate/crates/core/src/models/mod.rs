//! Models of the form `X_{n+1} = X_n M + g(X_n) + ξ_n`.

mod cell_division;
mod gwi;
mod law;
mod linear;
mod sdgw;

pub use cell_division::{joint_law, CellDivisionLaws, CellDivisionModel, CellDivisionParams};
pub use gwi::GwiModel;
pub use law::{LawSpec, OffspringLaw, DEFAULT_POPULATION_CEILING, OVERFLOW_GUARD, PMF_TOL};
pub use linear::LinearModel;
pub use sdgw::{LawGenerator, MixtureGenerator, MixtureType, SdgwModel};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::stats::Welford;
use crate::{Matrix, Perron};

/// Common interface of every model the criterion, Lyapunov probes and
/// simulator work with.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// The (baseline) mean matrix `M`.
    fn mean_matrix(&self) -> &Matrix;

    /// Perron eigendata of [`Model::mean_matrix`].
    fn perron(&self) -> &Perron;

    /// The drift `g(x)`.
    fn drift(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `σ²(x) = E[(ξ·u)² | X = x]` when available in closed form.
    fn sigma2(&self, x: &[f64]) -> Result<Option<f64>>;

    /// One transition from `x`.
    fn step(&self, x: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>>;

    /// Exponent `α` of the drift/variance scaling.
    fn alpha(&self) -> f64 {
        0.0
    }

    /// Moment exponent `δ` (finite-support laws have all moments).
    fn delta(&self) -> f64 {
        1.0
    }

    /// Whether the zero state is absorbing.
    fn absorbing_zero(&self) -> bool {
        false
    }

    /// Whether states are integer population vectors.
    fn integer_states(&self) -> bool {
        true
    }

    /// Conditional mean of the next state, `xM + g(x)`.
    fn mean_next(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut m = self.mean_matrix().mul_row(x);
        for (mi, gi) in m.iter_mut().zip(self.drift(x)?) {
            *mi += gi;
        }
        Ok(m)
    }
}

impl<M: Model + ?Sized> Model for &M {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn mean_matrix(&self) -> &Matrix {
        (**self).mean_matrix()
    }
    fn perron(&self) -> &Perron {
        (**self).perron()
    }
    fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).drift(x)
    }
    fn sigma2(&self, x: &[f64]) -> Result<Option<f64>> {
        (**self).sigma2(x)
    }
    fn step(&self, x: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        (**self).step(x, rng)
    }
    fn alpha(&self) -> f64 {
        (**self).alpha()
    }
    fn delta(&self) -> f64 {
        (**self).delta()
    }
    fn absorbing_zero(&self) -> bool {
        (**self).absorbing_zero()
    }
    fn integer_states(&self) -> bool {
        (**self).integer_states()
    }
    fn mean_next(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).mean_next(x)
    }
}

/// `σ²(x)` from the closed form or a one-step Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigma2 {
    pub value: f64,
    pub se: f64,
    pub estimated: bool,
}

/// Closed-form `σ²(x)` when the model has one, else the mean of `(ξ·u)²`
/// over `samples` one-step draws (from the rounded state for integer
/// models).
pub fn sigma2_or_estimate<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Sigma2> {
    if let Some(value) = model.sigma2(x)? {
        return Ok(Sigma2 { value, se: 0.0, estimated: false });
    }
    let state = if model.integer_states() { round_state(x) } else { x.to_vec() };
    let mean = model.mean_next(&state)?;
    let pd = model.perron();
    let centre = pd.project(&mean);
    let mut w = Welford::default();
    for i in 0..samples {
        let mut rng = crate::rng::stream(seed, crate::rng::domain::SIGMA2, i);
        let next = model.step(&state, &mut rng)?;
        let xi = pd.project(&next) - centre;
        w.push(xi * xi);
    }
    Ok(Sigma2 { value: w.mean(), se: w.sem(), estimated: true })
}

/// Coordinate-wise rounding to a non-negative integer state.
pub fn round_state(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.round().max(0.0)).collect()
}

/// Converts an `f64` state into exact population counts.
pub(crate) fn to_counts(x: &[f64]) -> Result<Vec<u64>> {
    x.iter()
        .map(|&v| {
            if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < OVERFLOW_GUARD as f64 {
                Ok(v as u64)
            } else {
                Err(Error::Domain(format!(
                    "state {x:?} is not a vector of non-negative integers"
                )))
            }
        })
        .collect()
}

/// Independent branching of `counts[i]` parents of each type `i` under
/// `laws[i]`; Gaussian sums above `ceiling` total parents.
pub(crate) fn branch<R: Rng + ?Sized>(
    laws: &[OffspringLaw],
    counts: &[u64],
    ceiling: u64,
    rng: &mut R,
    out: &mut [u64],
) -> Result<(), ()> {
    let total = counts.iter().try_fold(0u64, |acc, &c| acc.checked_add(c)).ok_or(())?;
    for (law, &n) in laws.iter().zip(counts) {
        if total > ceiling {
            law.add_sum_gaussian(n, rng, out)?;
        } else {
            law.add_sum(n, rng, out)?;
        }
    }
    Ok(())
}

pub(crate) fn overflow(x: &[f64]) -> Error {
    Error::Overflow { state: x.to_vec() }
}
