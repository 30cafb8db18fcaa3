//! State-dependent multitype Galton-Watson processes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::law::{OffspringLaw, DEFAULT_POPULATION_CEILING};
use crate::models::{branch, overflow, to_counts, Model};
use crate::rng::StreamRng;
use crate::spectral::{perron_default, NonNegMatrix, DEFAULT_CRITICALITY_TOL};
use crate::{Matrix, Perron};

/// Produces the per-type offspring laws in force at state `z`.
pub trait LawGenerator: Send + Sync {
    fn dim(&self) -> usize;

    /// Baseline matrix `M`, the limit of `M(z)`.
    fn baseline(&self) -> &Matrix;

    /// Offspring laws at a non-zero state `z`. Invalid laws are reported as
    /// [`Error::ModelConfig`] naming `z`.
    fn laws(&self, z: &[f64]) -> Result<Vec<OffspringLaw>>;

    /// `g(z) = z C(z)` in closed form, when available. The default
    /// subtracts the baseline from `M(z)`, which cancels at large `z`.
    fn drift(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// `Z_{n+1} = Σ_i Σ_{k ≤ Z_i} X_{i,·,k}(Z_n)`; zero is absorbing.
#[derive(Debug, Clone)]
pub struct SdgwModel<G> {
    generator: G,
    perron: Perron,
    ceiling: u64,
}

impl<G: LawGenerator> SdgwModel<G> {
    /// The baseline must be primitive with Perron root 1.
    pub fn new(generator: G) -> Result<Self> {
        let perron = perron_default(generator.baseline())?;
        if (perron.rho - 1.0).abs() > DEFAULT_CRITICALITY_TOL {
            return Err(Error::NotCritical { rho: perron.rho, tol: DEFAULT_CRITICALITY_TOL });
        }
        Ok(Self { generator, perron, ceiling: DEFAULT_POPULATION_CEILING })
    }

    pub fn with_population_ceiling(mut self, ceiling: u64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn generator(&self) -> &G {
        &self.generator
    }

    /// State-dependent mean matrix `M(z) = M + C(z)`.
    pub fn mean_matrix_at(&self, z: &[f64]) -> Result<Matrix> {
        let laws = self.generator.laws(z)?;
        NonNegMatrix::new(laws.iter().map(|l| l.mean().to_vec()).collect())
    }

    /// Checks that every law is valid and `C(z) ≥ 0` at each state.
    pub fn audit_states<'a>(&self, states: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        let base = self.generator.baseline();
        for z in states {
            if z.iter().all(|&x| x == 0.0) {
                continue;
            }
            let mz = self.mean_matrix_at(z)?;
            let d = base.dim();
            for i in 0..d {
                for j in 0..d {
                    if mz.get(i, j) - base.get(i, j) < -1e-12 {
                        return Err(Error::ModelConfig {
                            state: z.to_vec(),
                            reason: format!("correction C(z) has negative entry ({i}, {j})"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn is_zero(x: &[f64]) -> bool {
    x.iter().all(|&v| v == 0.0)
}

impl<G: LawGenerator> Model for SdgwModel<G> {
    fn name(&self) -> &'static str {
        "sdgw"
    }

    fn dim(&self) -> usize {
        self.generator.dim()
    }

    fn mean_matrix(&self) -> &Matrix {
        self.generator.baseline()
    }

    fn perron(&self) -> &Perron {
        &self.perron
    }

    /// `g(z) = z C(z)`; zero at the absorbing state.
    fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if is_zero(x) {
            return Ok(vec![0.0; d]);
        }
        if let Some(g) = self.generator.drift(x) {
            return Ok(g);
        }
        let mz = self.mean_matrix_at(x)?;
        let base = self.generator.baseline();
        let mut g = vec![0.0; d];
        for (i, &xi) in x.iter().enumerate() {
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += xi * (mz.get(i, j) - base.get(i, j));
            }
        }
        Ok(g)
    }

    /// `uᵀ Ṽ(z) u` with `Ṽ(z) = Σ z_i Γ_i(z)`.
    fn sigma2(&self, x: &[f64]) -> Result<Option<f64>> {
        if is_zero(x) {
            return Ok(Some(0.0));
        }
        let laws = self.generator.laws(x)?;
        Ok(Some(
            x.iter()
                .zip(&laws)
                .map(|(xi, l)| xi * l.quadratic_form(&self.perron.u))
                .sum(),
        ))
    }

    fn step(&self, x: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let counts = to_counts(x)?;
        if counts.iter().all(|&c| c == 0) {
            return Ok(vec![0.0; counts.len()]);
        }
        let laws = self.generator.laws(x)?;
        let mut out = vec![0u64; counts.len()];
        branch(&laws, &counts, self.ceiling, rng, &mut out).map_err(|_| overflow(x))?;
        Ok(out.into_iter().map(|c| c as f64).collect())
    }

    fn absorbing_zero(&self) -> bool {
        true
    }
}

/// One parent type of a [`MixtureGenerator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureType {
    pub base: OffspringLaw,
    pub boost: OffspringLaw,
    pub kappa: f64,
}

/// Table-driven state dependence: a type-`i` parent at state `z` reproduces
/// by `boost_i` with probability `min(1, κ_i / (1 + ‖z‖₁))` and by `base_i`
/// otherwise.
#[derive(Debug, Clone)]
pub struct MixtureGenerator {
    types: Vec<MixtureType>,
    baseline: Matrix,
}

impl MixtureGenerator {
    pub fn new(types: Vec<MixtureType>) -> Result<Self> {
        let d = types.len();
        if d == 0 {
            return Err(Error::InvalidLaw("no parent types".into()));
        }
        for (i, t) in types.iter().enumerate() {
            if t.base.dim() != d || t.boost.dim() != d {
                return Err(Error::InvalidLaw(format!("laws of type {i} must have dimension {d}")));
            }
            if !(t.kappa.is_finite() && t.kappa >= 0.0) {
                return Err(Error::Domain(format!("kappa of type {i} must be non-negative")));
            }
            if t.boost.mean().iter().zip(t.base.mean()).any(|(b, a)| b < a) {
                return Err(Error::Domain(format!(
                    "boost law of type {i} must dominate the base law in mean so that C(z) >= 0"
                )));
            }
        }
        let baseline = NonNegMatrix::new(types.iter().map(|t| t.base.mean().to_vec()).collect())?;
        Ok(Self { types, baseline })
    }

    pub fn types(&self) -> &[MixtureType] {
        &self.types
    }

    fn weight(&self, i: usize, z: &[f64]) -> f64 {
        let l1: f64 = z.iter().map(|x| x.abs()).sum();
        (self.types[i].kappa / (1.0 + l1)).min(1.0)
    }
}

impl LawGenerator for MixtureGenerator {
    fn dim(&self) -> usize {
        self.types.len()
    }

    fn baseline(&self) -> &Matrix {
        &self.baseline
    }

    fn laws(&self, z: &[f64]) -> Result<Vec<OffspringLaw>> {
        self.types
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.base.mix(&t.boost, self.weight(i, z)).map_err(|e| Error::ModelConfig {
                    state: z.to_vec(),
                    reason: e.to_string(),
                })
            })
            .collect()
    }

    fn drift(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; self.types.len()];
        for (i, t) in self.types.iter().enumerate() {
            let w = z[i] * self.weight(i, z);
            for (gj, (b, a)) in g.iter_mut().zip(t.boost.mean().iter().zip(t.base.mean())) {
                *gj += w * (b - a);
            }
        }
        Some(g)
    }
}
