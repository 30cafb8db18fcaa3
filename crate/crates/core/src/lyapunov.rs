//! Monte Carlo checks of the Lyapunov inequalities behind the growth
//! criterion, the k-step moment bounds of `Δ = X_{n+k}u − X_n u`, and
//! audits of the regularity assumptions.
//!
//! Every probe is a statistical decision: a gap is `Satisfied` when
//! `gap + band·SE ≤ 0`, `Violated` when `gap − band·SE ≥ 0`, and
//! `Indeterminate` otherwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{round_state, sigma2_or_estimate, Model};
use crate::rng::{domain, stream, subkey};
use crate::stats::{Estimate, Welford};

pub const DEFAULT_BAND: f64 = 2.0;
pub const DEFAULT_MAGNITUDES: [f64; 3] = [1e2, 1e3, 1e4];
/// Relative size of the off-ray perturbation applied to the first coordinate.
pub const OFF_RAY_SHIFT: f64 = 0.2;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    Log,
    InvLog,
}

impl Phi {
    /// Smallest admissible u-projection of a probed state.
    pub fn min_projection(self) -> f64 {
        match self {
            Phi::Log => 1.0,
            Phi::InvLog => 3.0,
        }
    }

    /// `log y`, or `1/log y` with projections below 3 shifted by `+3v`
    /// (which adds 3 to the projection). `None` when `log` is undefined.
    pub fn eval(self, y: f64) -> Option<f64> {
        match self {
            Phi::Log => (y > 0.0).then(|| y.ln()),
            Phi::InvLog => {
                let y = if y < 3.0 { y + 3.0 } else { y };
                Some(1.0 / y.ln())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    Indeterminate,
}

pub fn verdict(gap: f64, se: f64, band: f64) -> Verdict {
    if gap + band * se <= 0.0 {
        Verdict::Satisfied
    } else if gap - band * se >= 0.0 {
        Verdict::Violated
    } else {
        Verdict::Indeterminate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub n_samples: u64,
    pub seed: u64,
    pub band: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { n_samples: 10_000, seed: 0, band: DEFAULT_BAND }
    }
}

/// Estimated `E[φ(X_{n+k}u) | X_n = x] − φ(x·u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub state: Vec<f64>,
    pub projection: f64,
    pub phi: Phi,
    pub k: usize,
    pub gap: f64,
    pub se: f64,
    pub samples: u64,
    /// Fraction of paths absorbed at a zero projection (excluded from the
    /// gap under `φ = log`).
    pub absorption_fraction: f64,
    pub verdict: Verdict,
}

/// u-projections of `X_1..X_{k_max}` for `n` independent paths from `x`,
/// folded chunk by chunk into per-step accumulators in sample order.
fn fold_paths<F>(
    m: &(impl Model + ?Sized),
    x: &[f64],
    k_max: usize,
    n: u64,
    key: u64,
    mut fold: F,
) -> Result<()>
where
    F: FnMut(&[f64]),
{
    let pd = m.perron();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let paths: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(key, domain::LYAPUNOV, i);
                let mut state = x.to_vec();
                let mut proj = Vec::with_capacity(k_max);
                for _ in 0..k_max {
                    state = m.step(&state, &mut rng)?;
                    proj.push(pd.project(&state));
                }
                Ok(proj)
            })
            .collect::<Result<_>>()?;
        paths.iter().for_each(|p| fold(p));
        start = end;
    }
    Ok(())
}

fn check_state<M: Model + ?Sized>(m: &M, phi: Phi, x: &[f64]) -> Result<f64> {
    if x.len() != m.dim() {
        return Err(Error::Domain(format!("state {x:?} has wrong dimension")));
    }
    let y = m.perron().project(x);
    if !(y > phi.min_projection()) {
        return Err(Error::Domain(format!(
            "x·u = {y} must exceed {} for phi = {phi:?}",
            phi.min_projection()
        )));
    }
    Ok(y)
}

/// Gap records for every `k = 1..=k_max` from one set of shared paths.
fn gaps_up_to<M: Model + ?Sized>(
    m: &M,
    phi: Phi,
    x: &[f64],
    k_max: usize,
    opts: &ProbeOptions,
    key: u64,
) -> Result<Vec<GapRecord>> {
    let y0 = check_state(m, phi, x)?;
    let base = phi.eval(y0).expect("admissible projection");
    let mut acc = vec![Welford::default(); k_max];
    let mut absorbed = vec![0u64; k_max];
    fold_paths(m, x, k_max, opts.n_samples, key, |path| {
        for (k, &y) in path.iter().enumerate() {
            match phi.eval(y) {
                Some(val) => acc[k].push(val - base),
                None => absorbed[k] += 1,
            }
        }
    })?;
    Ok(acc
        .iter()
        .zip(&absorbed)
        .enumerate()
        .map(|(k, (w, &a))| {
            let (gap, se) = if w.count() > 0 { (w.mean(), w.sem()) } else { (f64::NAN, f64::NAN) };
            GapRecord {
                state: x.to_vec(),
                projection: y0,
                phi,
                k: k + 1,
                gap,
                se,
                samples: opts.n_samples,
                absorption_fraction: a as f64 / opts.n_samples.max(1) as f64,
                verdict: if gap.is_nan() { Verdict::Indeterminate } else { verdict(gap, se, opts.band) },
            }
        })
        .collect())
}

/// Estimates the k-step supermartingale gap of `φ` at `x`.
pub fn check_supermartingale<M: Model + ?Sized>(
    m: &M,
    phi: Phi,
    x: &[f64],
    k: usize,
    opts: &ProbeOptions,
) -> Result<GapRecord> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let mut records = gaps_up_to(m, phi, x, k, opts, subkey(opts.seed, 0))?;
    Ok(records.pop().expect("k >= 1"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub phi: Phi,
    pub k_max: usize,
    /// Smallest k with every grid state `Satisfied`, if any.
    pub found_k: Option<usize>,
    /// Smallest probed u-projection (the implied `s`).
    pub s: f64,
    /// Gap records indexed by `[k - 1][grid index]`.
    pub table: Vec<Vec<GapRecord>>,
}

impl ScanResult {
    pub fn records_at(&self, k: usize) -> &[GapRecord] {
        &self.table[k - 1]
    }
}

/// Finds the smallest `k ≤ k_max` whose gap is `Satisfied` at every grid
/// state. Paths are shared across `k` for each state.
pub fn scan_k<M: Model + ?Sized>(
    m: &M,
    phi: Phi,
    grid: &[Vec<f64>],
    k_max: usize,
    opts: &ProbeOptions,
) -> Result<ScanResult> {
    if grid.is_empty() || k_max == 0 {
        return Err(Error::Domain("scan needs a non-empty grid and k_max >= 1".into()));
    }
    let pd = m.perron();
    let proj: Vec<f64> = grid.iter().map(|x| pd.project(x)).collect();
    if proj.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("grid states must be sorted by increasing u-projection".into()));
    }
    let per_state = grid
        .iter()
        .enumerate()
        .map(|(i, x)| gaps_up_to(m, phi, x, k_max, opts, subkey(opts.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let table: Vec<Vec<GapRecord>> =
        (0..k_max).map(|k| per_state.iter().map(|recs| recs[k].clone()).collect()).collect();
    let found_k = table
        .iter()
        .position(|row| row.iter().all(|r| r.verdict == Verdict::Satisfied))
        .map(|k| k + 1);
    Ok(ScanResult { phi, k_max, found_k, s: proj[0], table })
}

/// Ray states `r v` at the given magnitudes plus two off-ray perturbations
/// per magnitude (`±0.2·(x·u)` on the first coordinate, clamped at zero),
/// sorted by u-projection.
pub fn default_grid<M: Model + ?Sized>(m: &M, magnitudes: &[f64], off_ray: bool) -> Vec<Vec<f64>> {
    let pd = m.perron();
    let fix = |x: Vec<f64>| if m.integer_states() { round_state(&x) } else { x };
    let mut grid = Vec::new();
    for &r in magnitudes {
        let ray = pd.ray(r);
        grid.push(fix(ray.clone()));
        if off_ray {
            for sign in [-1.0, 1.0] {
                let mut x = ray.clone();
                x[0] = (x[0] + sign * OFF_RAY_SHIFT * r).max(0.0);
                grid.push(fix(x));
            }
        }
    }
    grid.sort_by(|a, b| pd.project(a).total_cmp(&pd.project(b)));
    grid
}

/// Ray-only grid.
pub fn ray_grid<M: Model + ?Sized>(m: &M, magnitudes: &[f64]) -> Vec<Vec<f64>> {
    default_grid(m, magnitudes, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub state: Vec<f64>,
    pub projection: f64,
    /// `‖x(I − uv)‖`.
    pub transverse_norm: f64,
    pub k: usize,
    pub mean_delta: Estimate,
    pub mean_delta_sq: Estimate,
    pub mean_abs_delta_2_plus_delta: Estimate,
    /// `c₁ k (x·u)^α`.
    pub ref_mean: f64,
    /// `k d₁ (x·u)^(1+α)`.
    pub ref_second: f64,
    /// `|E[Δ] − ref_mean| / (x·u)^α` with its standard error.
    pub resid_mean: Estimate,
    /// `|E[Δ²] − ref_second| / (x·u)^(1+α)` with its standard error.
    pub resid_second: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScan {
    pub k: usize,
    pub delta: f64,
    pub c1: f64,
    pub d1: f64,
    pub entries: Vec<MomentEntry>,
}

/// Moments of `Δ = X_{n+k}u − X_n u` at each grid state against the
/// reference values `c₁k(x·u)^α` and `kd₁(x·u)^(1+α)`.
pub fn moment_scan<M: Model + ?Sized>(
    m: &M,
    grid: &[Vec<f64>],
    k: usize,
    c1: f64,
    d1: f64,
    opts: &ProbeOptions,
) -> Result<MomentScan> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let pd = m.perron();
    let alpha = m.alpha();
    let delta = m.delta();
    let kf = k as f64;
    let mut entries = Vec::with_capacity(grid.len());
    for (i, x) in grid.iter().enumerate() {
        let y0 = pd.project(x);
        let mut w1 = Welford::default();
        let mut w2 = Welford::default();
        let mut w3 = Welford::default();
        let key = subkey(opts.seed ^ domain::MOMENTS, i as u64);
        fold_paths(m, x, k, opts.n_samples, key, |path| {
            let d = path[k - 1] - y0;
            w1.push(d);
            w2.push(d * d);
            w3.push(d.abs().powf(2.0 + delta));
        })?;
        let ref_mean = c1 * kf * y0.powf(alpha);
        let ref_second = kf * d1 * y0.powf(1.0 + alpha);
        let n1 = y0.powf(alpha);
        let n2 = y0.powf(1.0 + alpha);
        let t = pd.transverse(x);
        entries.push(MomentEntry {
            state: x.clone(),
            projection: y0,
            transverse_norm: t.iter().map(|v| v * v).sum::<f64>().sqrt(),
            k,
            mean_delta: w1.estimate(),
            mean_delta_sq: w2.estimate(),
            mean_abs_delta_2_plus_delta: w3.estimate(),
            ref_mean,
            ref_second,
            resid_mean: Estimate { value: (w1.mean() - ref_mean).abs() / n1, se: w1.sem() / n1 },
            resid_second: Estimate { value: (w2.mean() - ref_second).abs() / n2, se: w2.sem() / n2 },
        });
    }
    Ok(MomentScan { k, delta, c1, d1, entries })
}

/// Mean transverse norm `E‖Y_{n+i}‖`, `i = 1..=steps`, from a start state
/// (typically on the Perron ray, where `Y_n ≈ 0`).
pub fn transverse_profile<M: Model + ?Sized>(
    m: &M,
    x0: &[f64],
    steps: usize,
    opts: &ProbeOptions,
) -> Result<Vec<Estimate>> {
    let pd = m.perron();
    let mut acc = vec![Welford::default(); steps];
    let paths: Vec<Vec<f64>> = (0..opts.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(opts.seed, domain::TRANSVERSE, i);
            let mut state = x0.to_vec();
            let mut out = Vec::with_capacity(steps);
            for _ in 0..steps {
                state = m.step(&state, &mut rng)?;
                let t = pd.transverse(&state);
                out.push(t.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    for p in &paths {
        for (a, &v) in acc.iter_mut().zip(p) {
            a.push(v);
        }
    }
    Ok(acc.iter().map(Welford::estimate).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRatio {
    pub projection: f64,
    /// `E‖ξ‖^(2+δ) / σ^(2+δ)`.
    pub ratio: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusFinding {
    pub lower: f64,
    pub upper: f64,
    pub min_drift_u: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFinding {
    pub radius: f64,
    pub max_sigma2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub delta: f64,
    pub a2_ratios: Vec<MomentRatio>,
    pub a2_max: f64,
    /// Ratio at the largest probed projection over the smallest.
    pub a2_trend: f64,
    pub a4: Vec<AnnulusFinding>,
    pub a4_violated: bool,
    pub a5: Vec<BallFinding>,
    /// Fraction of one-step draws with a strictly larger u-projection, per
    /// grid state. A proxy for unboundedness, not a verification.
    pub a3_proxy_increase: Vec<f64>,
    pub a3_proxy_holds: bool,
    pub degenerate_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub samples: u64,
    pub seed: u64,
    pub annuli: Vec<(f64, f64)>,
    pub balls: Vec<f64>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
            annuli: vec![(10.0, 100.0), (100.0, 1e3), (1e3, 1e4)],
            balls: vec![10.0, 100.0, 1e3],
        }
    }
}

/// Probes of the moment, drift-positivity and finiteness assumptions.
pub fn assumption_audit<M: Model + ?Sized>(
    m: &M,
    grid: &[Vec<f64>],
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let pd = m.perron();
    let delta = m.delta();
    let fix = |x: Vec<f64>| if m.integer_states() { round_state(&x) } else { x };

    let mut a2_ratios = Vec::new();
    let mut a3_proxy_increase = Vec::new();
    let mut degenerate_variance = false;
    for (i, x) in grid.iter().enumerate() {
        let y0 = pd.project(x);
        let mean = m.mean_next(x)?;
        let key = subkey(opts.seed ^ domain::AUDIT, i as u64);
        let draws: Vec<(f64, bool)> = (0..opts.samples)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(key, domain::AUDIT, j);
                let next = m.step(x, &mut rng)?;
                let norm = next.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                Ok((norm.powf(2.0 + delta), pd.project(&next) > y0))
            })
            .collect::<Result<_>>()?;
        let w: Welford = draws.iter().map(|d| d.0).collect();
        let up = draws.iter().filter(|d| d.1).count() as f64 / opts.samples.max(1) as f64;
        a3_proxy_increase.push(up);
        let s2 = sigma2_or_estimate(m, x, opts.samples, key)?.value;
        if s2 > 0.0 {
            let scale = s2.powf(1.0 + delta / 2.0);
            a2_ratios.push(MomentRatio { projection: y0, ratio: w.mean() / scale, se: w.sem() / scale });
        } else {
            degenerate_variance = true;
        }
    }
    let a2_max = a2_ratios.iter().map(|r| r.ratio).fold(f64::NAN, f64::max);
    let a2_trend = match (a2_ratios.first(), a2_ratios.last()) {
        (Some(a), Some(b)) if a.ratio > 0.0 => b.ratio / a.ratio,
        _ => f64::NAN,
    };

    let mut a4 = Vec::new();
    for &(lo, hi) in &opts.annuli {
        let mut min_drift = f64::INFINITY;
        for t in 1..=7 {
            let r = lo * (hi / lo).powf(t as f64 / 8.0);
            let ray = pd.ray(r);
            let mut probes = vec![fix(ray.clone())];
            for sign in [-1.0, 1.0] {
                let mut x = ray.clone();
                x[0] = (x[0] + sign * OFF_RAY_SHIFT * r).max(0.0);
                probes.push(fix(x));
            }
            for x in probes {
                let y = pd.project(&x);
                if y > lo && y < hi {
                    min_drift = min_drift.min(pd.project(&m.drift(&x)?));
                }
            }
        }
        a4.push(AnnulusFinding { lower: lo, upper: hi, min_drift_u: min_drift, violated: !(min_drift > 0.0) });
    }
    let a4_violated = a4.iter().any(|f| f.violated);

    let mut a5 = Vec::new();
    for &radius in &opts.balls {
        let d = m.dim();
        let per_axis: usize = if d <= 2 { 17 } else if d == 3 { 9 } else { 5 };
        let step = radius / (per_axis - 1) as f64;
        let mut max_s2 = 0.0f64;
        let mut points = 0;
        let total = per_axis.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = (0..d)
                .map(|_| {
                    let c = rem % per_axis;
                    rem /= per_axis;
                    c as f64 * step
                })
                .collect();
            let x = fix(x);
            if x.iter().map(|v| v * v).sum::<f64>().sqrt() >= radius {
                continue;
            }
            if m.absorbing_zero() && x.iter().all(|&v| v == 0.0) {
                continue;
            }
            let s2 = sigma2_or_estimate(m, &x, (opts.samples / 10).max(100), subkey(opts.seed, idx as u64))?;
            max_s2 = max_s2.max(s2.value);
            points += 1;
        }
        a5.push(BallFinding { radius, max_sigma2: max_s2, points });
    }

    Ok(AuditReport {
        delta,
        a2_max,
        a2_trend,
        a2_ratios,
        a4,
        a4_violated,
        a5,
        a3_proxy_holds: a3_proxy_increase.iter().all(|&f| f > 0.0),
        a3_proxy_increase,
        degenerate_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GwiModel, LinearModel, OffspringLaw};
    use crate::Matrix;

    fn critical_gw() -> GwiModel {
        // offspring {0, 2} with probability 1/2 each: zero drift, symmetric noise
        GwiModel::new(
            vec![OffspringLaw::new(vec![vec![0], vec![2]], vec![0.5, 0.5]).unwrap()],
            OffspringLaw::dirac(vec![0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(verdict(-1.0, 0.4, 2.0), Verdict::Satisfied);
        assert_eq!(verdict(1.0, 0.4, 2.0), Verdict::Violated);
        assert_eq!(verdict(-0.5, 0.4, 2.0), Verdict::Indeterminate);
        assert_eq!(verdict(0.0, 0.0, 2.0), Verdict::Satisfied);
    }

    #[test]
    fn inv_log_shift_below_three() {
        assert_eq!(Phi::InvLog.eval(1.0), Some(1.0 / 4f64.ln()));
        assert_eq!(Phi::InvLog.eval(10.0), Some(1.0 / 10f64.ln()));
        assert_eq!(Phi::Log.eval(0.0), None);
    }

    #[test]
    fn preconditions_on_projection() {
        let m = critical_gw();
        let o = ProbeOptions { n_samples: 10, ..Default::default() };
        assert!(check_supermartingale(&m, Phi::InvLog, &[2.0], 1, &o).is_err());
        assert!(check_supermartingale(&m, Phi::Log, &[1.0], 1, &o).is_err());
        assert!(check_supermartingale(&m, Phi::Log, &[2.0], 0, &o).is_err());
    }

    #[test]
    fn zero_drift_log_gap_is_nonpositive() {
        let m = critical_gw();
        // gap ≈ -1/(2y) against a per-sample spread of ≈ 1/√y
        let o = ProbeOptions { n_samples: 50_000, seed: 3, band: 2.0 };
        let grid = vec![vec![100.0], vec![300.0]];
        let scan = scan_k(&m, Phi::Log, &grid, 1, &o).unwrap();
        assert_eq!(scan.found_k, Some(1));
        assert_eq!(scan.s, 100.0);
        for r in scan.records_at(1) {
            assert!(r.gap <= 2.0 * r.se);
        }
    }

    #[test]
    fn absorption_is_disclosed() {
        let m = critical_gw();
        let o = ProbeOptions { n_samples: 4000, seed: 1, band: 2.0 };
        let r = check_supermartingale(&m, Phi::Log, &[2.0], 3, &o).unwrap();
        assert!(r.absorption_fraction > 0.1, "{r:?}");
        assert!(r.gap.is_finite());
    }

    #[test]
    fn deterministic_model_has_zero_moments() {
        let m = LinearModel::driftless(Matrix::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap()).unwrap();
        let grid = ray_grid(&m, &[1e2, 1e3]);
        let scan = moment_scan(&m, &grid, 3, 0.0, 0.0, &ProbeOptions { n_samples: 10, ..Default::default() })
            .unwrap();
        for e in &scan.entries {
            assert!(e.mean_delta.value.abs() < 1e-9);
            assert!(e.mean_delta_sq.value.abs() < 1e-9);
            assert!(e.transverse_norm < 1e-9);
        }
    }

    #[test]
    fn grid_is_sorted_with_off_ray_points() {
        let m = critical_gw();
        let g = default_grid(&m, &[100.0, 10.0], true);
        assert_eq!(g.len(), 6);
        assert!(g.windows(2).all(|w| w[0][0] <= w[1][0]));
        let err = scan_k(&m, Phi::Log, &[vec![100.0], vec![10.0]], 1, &ProbeOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn audit_flags_zero_drift() {
        let m = critical_gw();
        let grid = ray_grid(&m, &[100.0, 1000.0]);
        let rep = assumption_audit(&m, &grid, &AuditOptions { samples: 2000, ..Default::default() }).unwrap();
        assert!(rep.a4_violated);
        assert!(rep.a2_max.is_finite());
        assert!(rep.a3_proxy_holds);
        assert!(rep.a5.iter().all(|b| b.max_sigma2.is_finite()));
    }

    #[test]
    fn audit_on_deterministic_model() {
        let m = LinearModel::driftless(Matrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()).unwrap();
        let grid = ray_grid(&m, &[100.0]);
        let rep = assumption_audit(&m, &grid, &AuditOptions { samples: 10, ..Default::default() }).unwrap();
        assert!(rep.degenerate_variance);
        assert!(rep.a5.iter().all(|b| b.max_sigma2 == 0.0));
        assert!(!rep.a3_proxy_holds);
    }
}
