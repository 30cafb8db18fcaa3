//! Two-type cell-division process with state-dependent 0/1 offspring.
//!
//! A type-`i` parent at state `z` has children `(X_{i,1}, X_{i,2}) ∈ {0,1}²`
//! whose marginal means form row `i` of
//!
//! ```text
//! M(z) = [[p, 1-p], [p', 1-p']]
//!      + [[c1 a11/den1, c2 a12/den2], [c1 a21/den1, c2 a22/den2]]
//! den_j = z1 a1j + z2 a2j
//! ```
//!
//! and whose joint-success probability is `b_i(z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::law::OffspringLaw;
use crate::models::sdgw::{LawGenerator, SdgwModel};
use crate::spectral::NonNegMatrix;
use crate::Matrix;

/// Parameters of the cell-division example. `a` holds the (constant)
/// weights `a_{i,j}`; `beta_i` sets the vanishing perturbation
/// `b_i(z) = b_i + beta_i / (1 + ‖z‖)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDivisionParams {
    pub p: f64,
    pub p_prime: f64,
    pub c1: f64,
    pub c2: f64,
    pub b1: f64,
    pub b2: f64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub beta2: f64,
    #[serde(default = "unit_weights")]
    pub a: [[f64; 2]; 2],
}

fn unit_weights() -> [[f64; 2]; 2] {
    [[1.0; 2]; 2]
}

impl CellDivisionParams {
    pub fn new(p: f64, p_prime: f64, c1: f64, c2: f64, b1: f64, b2: f64) -> Self {
        Self { p, p_prime, c1, c2, b1, b2, beta1: 0.0, beta2: 0.0, a: unit_weights() }
    }

    fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.p) || !open_unit(self.p_prime) {
            return Err(Error::Domain(format!(
                "p = {} and p' = {} must lie in (0, 1)",
                self.p, self.p_prime
            )));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::Domain("c1 and c2 must be positive".into()));
        }
        for (name, b, hi) in [
            ("b1", self.b1, self.p.min(1.0 - self.p)),
            ("b2", self.b2, self.p_prime.min(1.0 - self.p_prime)),
        ] {
            if !(0.0..=hi).contains(&b) {
                return Err(Error::Domain(format!(
                    "{name} = {b} must lie in [0, {hi}] for the limiting law to exist"
                )));
            }
        }
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0 && self.beta1.is_finite() && self.beta2.is_finite()) {
            return Err(Error::Domain("beta1 and beta2 must be non-negative".into()));
        }
        if self.a.iter().flatten().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Domain("weights a_ij must be positive".into()));
        }
        Ok(())
    }
}

/// Joint law on `{0,1}²` with marginals `m1`, `m2` and `P(1,1) = b`.
/// Atoms are ordered `(1,1), (1,0), (0,1), (0,0)`.
pub fn joint_law(m1: f64, m2: f64, b: f64) -> Result<OffspringLaw> {
    let p11 = b;
    let p10 = m1 - b;
    let p01 = m2 - b;
    let p00 = 1.0 - (p11 + p10 + p01);
    let cells = [p11, p10, p01, p00];
    if let Some(c) = cells.iter().find(|&&c| !(c >= 0.0 && c <= 1.0)) {
        return Err(Error::InvalidLaw(format!(
            "marginals ({m1}, {m2}) with joint success {b} give cell probability {c}"
        )));
    }
    OffspringLaw::new(vec![vec![1, 1], vec![1, 0], vec![0, 1], vec![0, 0]], cells.to_vec())
}

/// Law generator of the cell-division example.
#[derive(Debug, Clone)]
pub struct CellDivisionLaws {
    params: CellDivisionParams,
    baseline: Matrix,
}

/// Largest coordinate sum of the small-state region checked at construction.
const VALIDATION_RADIUS: u32 = 40;

impl CellDivisionLaws {
    pub fn new(params: CellDivisionParams) -> Result<Self> {
        params.validate()?;
        let (p, q) = (params.p, params.p_prime);
        let baseline = NonNegMatrix::new(vec![vec![p, 1.0 - p], vec![q, 1.0 - q]])?;
        let laws = Self { params, baseline };
        for n in 1..=VALIDATION_RADIUS {
            for z1 in 0..=n {
                laws.laws(&[z1 as f64, (n - z1) as f64])?;
            }
        }
        Ok(laws)
    }

    pub fn params(&self) -> &CellDivisionParams {
        &self.params
    }

    /// `M(z)` entry by entry.
    pub fn mean_matrix_at(&self, z: &[f64]) -> Result<[[f64; 2]; 2]> {
        let CellDivisionParams { p, p_prime, c1, c2, a, .. } = self.params;
        let den = [z[0] * a[0][0] + z[1] * a[1][0], z[0] * a[0][1] + z[1] * a[1][1]];
        if !(den[0] > 0.0 && den[1] > 0.0) {
            return Err(Error::Domain(format!(
                "M(z) is undefined at z = {z:?}: zero denominator"
            )));
        }
        Ok([
            [p + c1 * a[0][0] / den[0], 1.0 - p + c2 * a[0][1] / den[1]],
            [p_prime + c1 * a[1][0] / den[0], 1.0 - p_prime + c2 * a[1][1] / den[1]],
        ])
    }

    /// Joint-success probability `b_i(z)`: the perturbed target projected
    /// onto the interval where all four cells are valid and `P(0,0) > 0`.
    pub fn joint_success(&self, i: usize, z: &[f64], m1: f64, m2: f64) -> Result<f64> {
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (b, beta) = if i == 0 {
            (self.params.b1, self.params.beta1)
        } else {
            (self.params.b2, self.params.beta2)
        };
        let lo = (m1 + m2 - 1.0).max(0.0);
        let hi = m1.min(m2);
        if m1.max(m2) >= 1.0 {
            return Err(Error::ModelConfig {
                state: z.to_vec(),
                reason: format!(
                    "marginal offspring mean of type {} reaches {} >= 1; P(no children) would vanish",
                    i + 1,
                    m1.max(m2)
                ),
            });
        }
        let floor = lo + (hi - lo) / (2.0 * (1.0 + norm));
        Ok((b + beta / (1.0 + norm)).clamp(floor, hi))
    }

    /// Joint offspring law of a type-`i` parent at state `z`.
    pub fn offspring_law(&self, z: &[f64], i: usize) -> Result<OffspringLaw> {
        let m = self.mean_matrix_at(z)?;
        let [m1, m2] = m[i];
        let b = self.joint_success(i, z, m1, m2)?;
        joint_law(m1, m2, b).map_err(|e| Error::ModelConfig { state: z.to_vec(), reason: e.to_string() })
    }

    /// `Σ_j v_j b_j`-weighted threshold `T` on `c1 + c2`.
    pub fn threshold(&self) -> f64 {
        crate::criterion::cell_division_threshold(self.params.p, self.params.p_prime, self.params.b1, self.params.b2)
            .expect("validated parameters")
    }
}

impl LawGenerator for CellDivisionLaws {
    fn dim(&self) -> usize {
        2
    }

    fn baseline(&self) -> &Matrix {
        &self.baseline
    }

    fn laws(&self, z: &[f64]) -> Result<Vec<OffspringLaw>> {
        Ok(vec![self.offspring_law(z, 0)?, self.offspring_law(z, 1)?])
    }

    /// `Σ_i z_i c_j a_ij / (z_1 a_1j + z_2 a_2j) = c_j` wherever `M(z)` is defined.
    fn drift(&self, _z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![self.params.c1, self.params.c2])
    }
}

pub type CellDivisionModel = SdgwModel<CellDivisionLaws>;

impl SdgwModel<CellDivisionLaws> {
    pub fn cell_division(params: CellDivisionParams) -> Result<Self> {
        SdgwModel::new(CellDivisionLaws::new(params)?)
    }
}
