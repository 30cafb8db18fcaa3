//! Non-negative matrix analysis: primitivity, Perron eigendata and the
//! contraction factor of `M - uv`.
//!
//! Vectors follow the row/column convention of the model: states are row
//! vectors multiplied on the left (`xM`), the right eigenvector `u` is a
//! column (`Mu = ρu`) and the left eigenvector `v` is a row (`vM = ρv`).
//! The pair is normalized so that `uᵀu = 1` and `vu = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_CRITICALITY_TOL: f64 = 1e-9;

/// Square matrix with non-negative entries, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct NonNegMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> NonNegMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {dim} (matrix must be square)",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some((k, x)) = data
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x >= T::zero()))
        {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) = {x} is negative or not finite",
                k / dim,
                k % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim).map(<[T]>::to_vec).collect()
    }

    /// Column product `M x`.
    pub fn mul_col(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// Row product `x M`.
    pub fn mul_row(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o = *o + xi * m;
            }
        }
        out
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::from_row_major(self.dim, self.data.iter().map(|&x| x * factor).collect())
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let data = (0..d * d).map(|k| self.get(k % d, k / d)).collect();
        Self { dim: d, data }
    }
}

impl<T: Scalar> TryFrom<Vec<Vec<T>>> for NonNegMatrix<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl<T: Scalar> From<NonNegMatrix<T>> for Vec<Vec<T>> {
    fn from(m: NonNegMatrix<T>) -> Self {
        m.rows()
    }
}

/// Perron root with jointly normalized right (`u`) and left (`v`)
/// eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronData<T> {
    pub rho: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub residual: T,
}

impl<T: Scalar> PerronData<T> {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// The u-projection `x·u` tracked by the growth criterion.
    pub fn project(&self, x: &[T]) -> T {
        dot(x, &self.u)
    }

    /// Transverse component `x(I - uv) = x - (x·u) v`.
    pub fn transverse(&self, x: &[T]) -> Vec<T> {
        let p = self.project(x);
        x.iter().zip(&self.v).map(|(&xi, &vi)| xi - p * vi).collect()
    }

    /// The point `r v` on the Perron ray; its u-projection is exactly `r`.
    pub fn ray(&self, r: T) -> Vec<T> {
        self.v.iter().map(|&vi| r * vi).collect()
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Wielandt bound `d² - 2d + 2`: a primitive matrix has a strictly positive
/// power no later than this exponent.
pub fn wielandt_bound(d: usize) -> usize {
    d * d + 2 - 2 * d
}

/// Decides primitivity exactly using boolean powers up to the Wielandt bound.
pub fn is_primitive<T: Scalar>(m: &NonNegMatrix<T>) -> bool {
    let d = m.dim();
    let pattern: Vec<bool> = m.data.iter().map(|&x| x > T::zero()).collect();
    let mut power = pattern.clone();
    for _ in 1..=wielandt_bound(d) {
        if power.iter().all(|&b| b) {
            return true;
        }
        let mut next = vec![false; d * d];
        for i in 0..d {
            for k in 0..d {
                if !power[i * d + k] {
                    continue;
                }
                for j in 0..d {
                    next[i * d + j] |= pattern[k * d + j];
                }
            }
        }
        power = next;
    }
    false
}

struct PowerRun<T> {
    vector: Vec<T>,
    rho: T,
    change: T,
    iterations: usize,
    converged: bool,
}

fn power_iterate<T: Scalar>(
    apply: impl Fn(&[T]) -> Vec<T>,
    d: usize,
    tol: T,
    max_iter: usize,
) -> PowerRun<T> {
    let start = T::one() / T::lit(d as f64).sqrt();
    let mut x = vec![start; d];
    let mut rho = T::zero();
    let mut change = T::infinity();
    for it in 1..=max_iter {
        let y = apply(&x);
        // x has unit norm, so this is the Rayleigh quotient.
        let next_rho = dot(&x, &y);
        let n = norm2(&y);
        if n == T::zero() {
            return PowerRun { vector: x, rho: T::zero(), change, iterations: it, converged: false };
        }
        x = y.into_iter().map(|yi| yi / n).collect();
        change = (next_rho - rho).abs();
        rho = next_rho;
        if it > 1 && change < tol {
            return PowerRun { vector: x, rho, change, iterations: it, converged: true };
        }
    }
    PowerRun { vector: x, rho, change, iterations: max_iter, converged: false }
}

/// Perron root and eigenvectors by power iteration from the all-ones vector.
///
/// `u` is scaled to unit Euclidean norm first, then `v` is scaled so that
/// `vu = 1`.
pub fn perron<T: Scalar>(m: &NonNegMatrix<T>, tol: T, max_iter: usize) -> Result<PerronData<T>> {
    let d = m.dim();
    if !is_primitive(m) {
        return Err(Error::NotPrimitive { bound: wielandt_bound(d) });
    }
    let right = power_iterate(|x| m.mul_col(x), d, tol, max_iter);
    let left = power_iterate(|x| m.mul_row(x), d, tol, max_iter);
    if !(right.converged && left.converged) {
        let worst = if right.converged { &left } else { &right };
        return Err(Error::NonConvergence {
            iterations: worst.iterations,
            rho: worst.rho.as_f64(),
            change: worst.change.as_f64(),
            u: right.vector.iter().map(|x| x.as_f64()).collect(),
            v: left.vector.iter().map(|x| x.as_f64()).collect(),
        });
    }
    let rho = right.rho;
    let un = norm2(&right.vector);
    let u: Vec<T> = right.vector.iter().map(|&x| x / un).collect();
    let vu = dot(&left.vector, &u);
    let v: Vec<T> = left.vector.iter().map(|&x| x / vu).collect();

    let mu = m.mul_col(&u);
    let vm = m.mul_row(&v);
    let res_u = mu.iter().zip(&u).fold(T::zero(), |acc, (&a, &b)| acc.max((a - rho * b).abs()));
    let res_v = vm.iter().zip(&v).fold(T::zero(), |acc, (&a, &b)| acc.max((a - rho * b).abs()));
    Ok(PerronData { rho, u, v, residual: res_u.max(res_v) })
}

pub fn perron_default(m: &NonNegMatrix<f64>) -> Result<PerronData<f64>> {
    perron(m, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

fn inf_norm<T: Scalar>(a: &[T], d: usize) -> T {
    a.chunks(d)
        .map(|row| row.iter().fold(T::zero(), |s, x| s + x.abs()))
        .fold(T::zero(), T::max)
}

fn square<T: Scalar>(a: &[T], d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..d {
                out[i * d + j] = out[i * d + j] + aik * a[k * d + j];
            }
        }
    }
    out
}

/// Spectral radius of `A` via Gelfand's formula `‖A^m‖^(1/m)` along the
/// schedule `m = 2^j`, using normalized repeated squaring.
pub fn gelfand_radius<T: Scalar>(a: &[T], d: usize) -> T {
    let n0 = inf_norm(a, d);
    if n0 == T::zero() {
        return T::zero();
    }
    let mut b: Vec<T> = a.iter().map(|&x| x / n0).collect();
    // log ‖A^(2^j)‖ = log_norm, with b = A^(2^j) / ‖A^(2^j)‖
    let mut log_norm = n0.ln();
    let mut m = T::one();
    let mut estimate = n0;
    let two = T::lit(2.0);
    for _ in 0..64 {
        let sq = square(&b, d);
        let n = inf_norm(&sq, d);
        if n == T::zero() || !n.is_finite() {
            return T::zero();
        }
        log_norm = two * log_norm + n.ln();
        m = m * two;
        b = sq.into_iter().map(|x| x / n).collect();
        let next = (log_norm / m).exp();
        let done = (next - estimate).abs() <= T::epsilon() * T::lit(16.0) * next.max(T::one());
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Spectral radius `λ` of `M - uv` for a critical primitive `M`.
pub fn contraction_factor<T: Scalar>(
    m: &NonNegMatrix<T>,
    pd: &PerronData<T>,
    criticality_tol: T,
) -> Result<T> {
    if (pd.rho - T::one()).abs() > criticality_tol {
        return Err(Error::NotCritical { rho: pd.rho.as_f64(), tol: criticality_tol.as_f64() });
    }
    let d = m.dim();
    if pd.dim() != d {
        return Err(Error::InvalidMatrix(format!(
            "eigendata has dimension {}, matrix has {d}",
            pd.dim()
        )));
    }
    let a: Vec<T> = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            m.get(i, j) - pd.u[i] * pd.v[j]
        })
        .collect();
    Ok(gelfand_radius(&a, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: &[&[f64]]) -> NonNegMatrix<f64> {
        NonNegMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn rejects_negative_and_ragged() {
        assert!(NonNegMatrix::new(vec![vec![1.0, -0.1], vec![0.0, 1.0]]).is_err());
        assert!(NonNegMatrix::new(vec![vec![1.0, 0.0], vec![0.0]]).is_err());
        assert!(NonNegMatrix::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn primitivity_examples() {
        assert!(!is_primitive(&mat(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(is_primitive(&mat(&[&[0.5, 0.5], &[0.5, 0.5]])));
        assert!(is_primitive(&mat(&[&[0.3, 0.7], &[0.6, 0.4]])));
        assert!(is_primitive(&mat(&[&[1.0]])));
        assert!(!is_primitive(&mat(&[&[0.0]])));
        // reducible
        assert!(!is_primitive(&mat(&[&[1.0, 1.0], &[0.0, 1.0]])));
        // primitive but needs the full Wielandt exponent (d = 3 -> 5)
        assert!(is_primitive(&mat(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0]])));
    }

    #[test]
    fn perron_symmetric_doubly_stochastic() {
        let m = mat(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let pd = perron_default(&m).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(pd.rho, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pd.u[0], h, epsilon = 1e-12);
        assert_abs_diff_eq!(pd.v[1], h, epsilon = 1e-12);
    }

    #[test]
    fn perron_rejects_non_primitive() {
        let m = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(perron_default(&m), Err(Error::NotPrimitive { bound: 2 })));
    }

    #[test]
    fn perron_reports_non_convergence_with_last_iterate() {
        let m = mat(&[&[0.3, 0.7], &[0.6, 0.4]]);
        match perron(&m, 1e-30, 5) {
            Err(Error::NonConvergence { iterations, u, .. }) => {
                assert_eq!(iterations, 5);
                assert_eq!(u.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn contraction_of_rank_one_is_zero() {
        let m = mat(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let pd = perron_default(&m).unwrap();
        let lambda = contraction_factor(&m, &pd, 1e-9).unwrap();
        assert!(lambda < 1e-12, "{lambda}");
    }

    #[test]
    fn contraction_requires_criticality() {
        let m = mat(&[&[0.5, 0.5], &[0.5, 0.5]]).scaled(0.9).unwrap();
        let pd = perron_default(&m).unwrap();
        assert!(matches!(contraction_factor(&m, &pd, 1e-9), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn gelfand_on_nilpotent_and_jordan() {
        assert_eq!(gelfand_radius(&[0.0, 1.0, 0.0, 0.0], 2), 0.0);
        let r = gelfand_radius(&[0.5, 1.0, 0.0, 0.5], 2);
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn f32_instantiation() {
        let m = NonNegMatrix::<f32>::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let pd = perron(&m, 1e-6, 10_000).unwrap();
        assert!((pd.rho - 1.0).abs() < 1e-5);
        let lambda = contraction_factor(&m, &pd, 1e-4).unwrap();
        assert!((lambda - 0.3).abs() < 1e-3);
    }

    #[test]
    fn serde_validates_entries() {
        let m: NonNegMatrix<f64> = serde_json::from_str("[[0.3,0.7],[0.6,0.4]]").unwrap();
        assert_eq!(m.dim(), 2);
        assert!(serde_json::from_str::<NonNegMatrix<f64>>("[[0.3,-0.7],[0.6,0.4]]").is_err());
    }
}
