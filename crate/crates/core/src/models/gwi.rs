//! Multitype Galton-Watson process with immigration.

use crate::error::{Error, Result};
use crate::models::law::{OffspringLaw, DEFAULT_POPULATION_CEILING};
use crate::models::{branch, overflow, to_counts, Model};
use crate::rng::StreamRng;
use crate::spectral::{perron_default, NonNegMatrix};
use crate::{Matrix, Perron};

/// `Z_{n+1} = Z_n M + a + ξ_n` with one offspring law per parent type and
/// an i.i.d. immigration vector each generation.
#[derive(Debug, Clone)]
pub struct GwiModel {
    offspring: Vec<OffspringLaw>,
    immigration: OffspringLaw,
    mean: Matrix,
    perron: Perron,
    // uᵀ Γ_i u for each parent type
    u_gamma_u: Vec<f64>,
    tau2: f64,
    ceiling: u64,
}

impl GwiModel {
    /// Builds the model; the mean matrix must be primitive.
    pub fn new(offspring: Vec<OffspringLaw>, immigration: OffspringLaw) -> Result<Self> {
        let d = offspring.len();
        if d == 0 {
            return Err(Error::InvalidLaw("no offspring laws".into()));
        }
        if let Some((i, l)) = offspring.iter().enumerate().find(|(_, l)| l.dim() != d) {
            return Err(Error::InvalidLaw(format!(
                "offspring law of type {i} has dimension {}, expected {d}",
                l.dim()
            )));
        }
        if immigration.dim() != d {
            return Err(Error::InvalidLaw(format!(
                "immigration law has dimension {}, expected {d}",
                immigration.dim()
            )));
        }
        let mean = NonNegMatrix::new(offspring.iter().map(|l| l.mean().to_vec()).collect())?;
        let perron = perron_default(&mean)?;
        let u_gamma_u = offspring.iter().map(|l| l.quadratic_form(&perron.u)).collect();
        let tau2 = immigration.quadratic_form(&perron.u);
        Ok(Self {
            offspring,
            immigration,
            mean,
            perron,
            u_gamma_u,
            tau2,
            ceiling: DEFAULT_POPULATION_CEILING,
        })
    }

    pub fn with_population_ceiling(mut self, ceiling: u64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn population_ceiling(&self) -> u64 {
        self.ceiling
    }

    pub fn offspring(&self) -> &[OffspringLaw] {
        &self.offspring
    }

    pub fn immigration(&self) -> &OffspringLaw {
        &self.immigration
    }

    /// Immigration mean `a`.
    pub fn immigration_mean(&self) -> &[f64] {
        self.immigration.mean()
    }

    /// `τ² = Var(A₁·u)`.
    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    /// `a·u`.
    pub fn au(&self) -> f64 {
        self.perron.project(self.immigration.mean())
    }

    /// `uᵀ V(z) u` with `V(z) = Σ z_i Γ_i`.
    pub fn u_v_u(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.u_gamma_u).map(|(zi, g)| zi * g).sum()
    }

    /// Violations of the standing assumptions `P(A₁ = 0) > 0` and
    /// `P(X_{i,j} = 0) > 0`.
    pub fn standing_assumption_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.immigration.prob_zero() <= 0.0 {
            out.push("immigration law puts no mass on the zero vector".to_string());
        }
        for (i, l) in self.offspring.iter().enumerate() {
            for j in 0..self.offspring.len() {
                if l.prob_zero_coord(j) <= 0.0 {
                    out.push(format!(
                        "offspring law of type {i} never produces zero children of type {j}"
                    ));
                }
            }
        }
        out
    }

    /// `σ²(z) = uᵀV(z)u + τ²`.
    pub fn sigma2_exact(&self, z: &[f64]) -> f64 {
        self.u_v_u(z) + self.tau2
    }
}

impl Model for GwiModel {
    fn name(&self) -> &'static str {
        "gwi"
    }

    fn dim(&self) -> usize {
        self.offspring.len()
    }

    fn mean_matrix(&self) -> &Matrix {
        &self.mean
    }

    fn perron(&self) -> &Perron {
        &self.perron
    }

    fn drift(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.immigration.mean().to_vec())
    }

    fn sigma2(&self, x: &[f64]) -> Result<Option<f64>> {
        Ok(Some(self.sigma2_exact(x)))
    }

    fn step(&self, x: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let counts = to_counts(x)?;
        let mut out = vec![0u64; counts.len()];
        branch(&self.offspring, &counts, self.ceiling, rng, &mut out).map_err(|_| overflow(x))?;
        self.immigration.add_sum(1, rng, &mut out).map_err(|_| overflow(x))?;
        Ok(out.into_iter().map(|c| c as f64).collect())
    }

    /// Zero is absorbing exactly when there is no immigration.
    fn absorbing_zero(&self) -> bool {
        let imm = &self.immigration;
        imm.support().iter().zip(imm.probs()).all(|(s, &p)| p == 0.0 || s.iter().all(|&x| x == 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::Welford;

    fn example() -> GwiModel {
        GwiModel::new(
            vec![
                OffspringLaw::new(
                    vec![vec![0, 0], vec![1, 0], vec![0, 2], vec![1, 1]],
                    vec![0.4, 0.2, 0.3, 0.1],
                )
                .unwrap(),
                OffspringLaw::new(
                    vec![vec![0, 0], vec![2, 0], vec![0, 1], vec![1, 1]],
                    vec![0.4, 0.2, 0.2, 0.2],
                )
                .unwrap(),
            ],
            OffspringLaw::new(vec![vec![0, 0], vec![1, 0]], vec![0.9, 0.1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn mean_matrix_and_eigendata() {
        let m = example();
        assert!((m.mean_matrix().get(0, 1) - 0.7).abs() < 1e-15);
        assert!((m.mean_matrix().get(1, 0) - 0.6).abs() < 1e-15);
        assert!((m.perron().rho - 1.0).abs() < 1e-12);
        assert!(m.standing_assumption_violations().is_empty());
    }

    #[test]
    fn zero_state_reproduces_immigration_law() {
        let m = example();
        let mut hits = 0u32;
        let n = 20_000;
        for i in 0..n {
            let next = m.step(&[0.0, 0.0], &mut stream(5, 0, i)).unwrap();
            assert_eq!(next[1], 0.0);
            assert!(next[0] == 0.0 || next[0] == 1.0);
            hits += next[0] as u32;
        }
        let p = hits as f64 / n as f64;
        assert!((p - 0.1).abs() < 4.0 * (0.09f64 / n as f64).sqrt());
    }

    #[test]
    fn deterministic_reproduction_is_identity() {
        let m = GwiModel::new(
            vec![OffspringLaw::dirac(vec![1]).unwrap()],
            OffspringLaw::dirac(vec![0]).unwrap(),
        )
        .unwrap();
        for z in [0.0, 1.0, 17.0, 12345.0] {
            assert_eq!(m.step(&[z], &mut stream(1, 0, 0)).unwrap(), vec![z]);
        }
        assert_eq!(m.standing_assumption_violations().len(), 1);
    }

    #[test]
    fn one_step_mean_from_5_3() {
        let m = example();
        let z = [5.0, 3.0];
        let exact = m.mean_next(&z).unwrap();
        let mut w = [Welford::default(), Welford::default()];
        for i in 0..100_000 {
            let next = m.step(&z, &mut stream(9, 0, i)).unwrap();
            w[0].push(next[0]);
            w[1].push(next[1]);
        }
        for j in 0..2 {
            assert!((w[j].mean() - exact[j]).abs() < 4.0 * w[j].sem(), "coord {j}");
        }
        // closed form zM + a
        assert!((exact[0] - (5.0 * 0.3 + 3.0 * 0.6 + 0.1)).abs() < 1e-12);
        assert!((exact[1] - (5.0 * 0.7 + 3.0 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn sigma2_special_cases() {
        let m = example();
        assert!((m.sigma2_exact(&[0.0, 0.0]) - m.tau2()).abs() < 1e-15);
        let det = GwiModel::new(
            vec![
                OffspringLaw::dirac(vec![1, 1]).unwrap(),
                OffspringLaw::dirac(vec![1, 0]).unwrap(),
            ],
            OffspringLaw::dirac(vec![0, 0]).unwrap(),
        )
        .unwrap();
        assert_eq!(det.sigma2_exact(&[4.0, 9.0]), 0.0);
    }

    #[test]
    fn sigma2_matches_monte_carlo_near_ray() {
        let m = example();
        let pd = m.perron().clone();
        let z: Vec<f64> = pd.ray(400.0).iter().map(|x| x.round()).collect();
        let centre = pd.project(&m.mean_next(&z).unwrap());
        let mut w = Welford::default();
        for i in 0..100_000 {
            let next = m.step(&z, &mut stream(21, 0, i)).unwrap();
            w.push(pd.project(&next) - centre);
        }
        let exact = m.sigma2_exact(&z);
        // empirical variance vs exact; relative SE of a variance ~ sqrt(2/n)
        assert!((w.variance() / exact - 1.0).abs() < 4.0 * (2.0f64 / 1e5).sqrt());
        // ξ·u is centred
        assert!(w.mean().abs() < 5.0 * w.sem());
    }
}
