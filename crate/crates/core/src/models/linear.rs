//! Deterministic linear recursion `x ↦ xM + g`.

use crate::error::{Error, Result};
use crate::models::Model;
use crate::rng::StreamRng;
use crate::spectral::perron_default;
use crate::{Matrix, Perron};

/// Noise-free model with a constant drift; `ξ ≡ 0`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    mean: Matrix,
    perron: Perron,
    drift: Vec<f64>,
}

impl LinearModel {
    pub fn new(mean: Matrix, drift: Vec<f64>) -> Result<Self> {
        if drift.len() != mean.dim() {
            return Err(Error::Domain(format!(
                "drift has length {}, expected {}",
                drift.len(),
                mean.dim()
            )));
        }
        let perron = perron_default(&mean)?;
        Ok(Self { mean, perron, drift })
    }

    pub fn driftless(mean: Matrix) -> Result<Self> {
        let d = mean.dim();
        Self::new(mean, vec![0.0; d])
    }
}

impl Model for LinearModel {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.mean.dim()
    }

    fn mean_matrix(&self) -> &Matrix {
        &self.mean
    }

    fn perron(&self) -> &Perron {
        &self.perron
    }

    fn drift(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.drift.clone())
    }

    fn sigma2(&self, _x: &[f64]) -> Result<Option<f64>> {
        Ok(Some(0.0))
    }

    fn step(&self, x: &[f64], _rng: &mut StreamRng) -> Result<Vec<f64>> {
        self.mean_next(x)
    }

    fn integer_states(&self) -> bool {
        false
    }
}
