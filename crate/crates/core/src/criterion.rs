//! Criticality, drift/variance constants along the Perron ray and the
//! resulting growth classification.
//!
//! Along `x = r v` the u-projection is exactly `r`. With
//! `g(x)·u ≈ c₁ (x·u)^α` and `σ²(x) ≈ d₁ (x·u)^(1+α)`, the process stays
//! bounded a.s. when `2c₁ < d₁` and grows without bound with positive
//! probability when `2c₁ > d₁`. Limits are replaced by finite evidence on a
//! radii schedule; any margin inside the declared uncertainty is reported
//! as [`GrowthClass::Inconclusive`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{sigma2_or_estimate, GwiModel, Model, Sigma2};
use crate::scalar::Scalar;
use crate::spectral::{PerronData, DEFAULT_CRITICALITY_TOL};

pub const DEFAULT_RADII: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
pub const DEFAULT_STABILIZATION: f64 = 0.25;
pub const DEFAULT_SIGMA2_SAMPLES: u64 = 100_000;
/// Relative band inside which `2a·u` and `uᵀV(v)u` count as equal.
pub const GWI_EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthClass {
    /// `2c₁ < d₁`: `P(‖X_n‖ → ∞) = 0`.
    BoundedAS,
    /// `2c₁ > d₁`: `P(‖X_n‖ → ∞) > 0`.
    UnboundedPositiveProb,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GwiClass {
    Recurrent,
    Transient,
    Inconclusive,
}

pub fn classify_criticality<T: Scalar>(pd: &PerronData<T>, tol: T) -> Criticality {
    if pd.rho < T::one() - tol {
        Criticality::Subcritical
    } else if pd.rho > T::one() + tol {
        Criticality::Supercritical
    } else {
        Criticality::Critical
    }
}

/// Threshold `T = (p' b₁ + (1-p) b₂) / (1 - p + p')` on `c₁ + c₂` for the
/// cell-division model.
pub fn cell_division_threshold<T: Scalar>(p: T, p_prime: T, b1: T, b2: T) -> Result<T> {
    let (zero, one) = (T::zero(), T::one());
    let open = |x: T| x > zero && x < one;
    let closed = |x: T| x >= zero && x <= one;
    if !(open(p) && open(p_prime) && closed(b1) && closed(b2)) {
        return Err(Error::Domain(format!(
            "threshold needs p, p' in (0,1) and b1, b2 in [0,1]; got p={p}, p'={p_prime}, b1={b1}, b2={b2}"
        )));
    }
    let w = one - p + p_prime;
    Ok((p_prime * b1 + (one - p) * b2) / w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub r: f64,
    pub ratio: f64,
    pub drift_u: f64,
    pub sigma2: f64,
    pub sigma2_se: f64,
    pub sigma2_estimated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub sigma2_samples: u64,
    pub seed: u64,
    pub stabilization: f64,
    pub criticality_tol: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            sigma2_samples: DEFAULT_SIGMA2_SAMPLES,
            seed: 0,
            stabilization: DEFAULT_STABILIZATION,
            criticality_tol: DEFAULT_CRITICALITY_TOL,
        }
    }
}

fn require_critical<M: Model + ?Sized>(m: &M, tol: f64) -> Result<()> {
    let rho = m.perron().rho;
    if classify_criticality(m.perron(), tol) != Criticality::Critical {
        return Err(Error::NotCritical { rho, tol });
    }
    Ok(())
}

fn ratio_sample<M: Model + ?Sized>(m: &M, r: f64, opts: &EstimatorOptions) -> Result<RatioSample> {
    let pd = m.perron();
    let x = pd.ray(r);
    let drift_u = pd.project(&m.drift(&x)?);
    let Sigma2 { value, se, estimated } =
        sigma2_or_estimate(m, &x, opts.sigma2_samples, crate::rng::subkey(opts.seed, r.to_bits()))?;
    let ratio = if value > 0.0 { 2.0 * r * drift_u / value } else { f64::NAN };
    Ok(RatioSample { r, ratio, drift_u, sigma2: value, sigma2_se: se, sigma2_estimated: estimated })
}

/// `2 r (g(rv)·u) / σ²(rv)`.
pub fn growth_ratio<M: Model + ?Sized>(m: &M, r: f64, opts: &EstimatorOptions) -> Result<RatioSample> {
    require_critical(m, opts.criticality_tol)?;
    let s = ratio_sample(m, r, opts)?;
    if !(s.sigma2 > 0.0) {
        return Err(Error::DegenerateVariance { r });
    }
    Ok(s)
}

/// An estimated constant with its declared uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub r: f64,
    pub c1: f64,
    pub d1: f64,
    pub d1_mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimates {
    pub c1: Constant,
    pub d1: Constant,
    pub per_radius: Vec<RadiusEstimate>,
    pub samples: Vec<RatioSample>,
    pub non_stabilizing: bool,
    pub sigma2_estimated: bool,
}

fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::Domain("radii schedule needs at least three radii".into()));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !r.is_finite()) {
        return Err(Error::Domain("radii must be positive, finite and strictly increasing".into()));
    }
    Ok(())
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Estimates `c₁` and `d₁` on the radii schedule.
///
/// `c₁(r) = g(rv)·u / r^α`. `d₁(r)` is the secant slope of `σ²(rv)`
/// against `r^(1+α)` between consecutive radii (plain ratio at the first
/// radius), which removes additive constants such as the immigration
/// variance. The estimate is the value at the largest radius; its
/// uncertainty is the spread over the last three radii plus twice the Monte
/// Carlo standard error when `σ²` is simulated.
pub fn estimate_c1_d1<M: Model + ?Sized>(
    m: &M,
    radii: &[f64],
    opts: &EstimatorOptions,
) -> Result<ConstantEstimates> {
    validate_radii(radii)?;
    let alpha = m.alpha();
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (-1, 1)")));
    }
    let samples = radii
        .iter()
        .map(|&r| ratio_sample(m, r, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut per_radius = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        let c1 = s.drift_u / s.r.powf(alpha);
        let (d1, d1_mc_se) = if k == 0 {
            let scale = s.r.powf(1.0 + alpha);
            (s.sigma2 / scale, s.sigma2_se / scale)
        } else {
            let prev = &samples[k - 1];
            let dx = s.r.powf(1.0 + alpha) - prev.r.powf(1.0 + alpha);
            ((s.sigma2 - prev.sigma2) / dx, s.sigma2_se.hypot(prev.sigma2_se) / dx)
        };
        per_radius.push(RadiusEstimate { r: s.r, c1, d1, d1_mc_se });
    }
    let tail = &per_radius[per_radius.len() - 3..];
    let last = tail.last().expect("at least three radii");
    let c1_spread = spread(&tail.iter().map(|e| e.c1).collect::<Vec<_>>());
    let d1_spread = spread(&tail.iter().map(|e| e.d1).collect::<Vec<_>>());
    let c1 = Constant { value: last.c1, uncertainty: c1_spread };
    let d1 = Constant { value: last.d1, uncertainty: d1_spread + 2.0 * last.d1_mc_se };
    let non_stabilizing = c1_spread > opts.stabilization * c1.value.abs()
        || d1_spread > opts.stabilization * d1.value.abs();
    Ok(ConstantEstimates {
        c1,
        d1,
        per_radius,
        sigma2_estimated: samples.iter().any(|s| s.sigma2_estimated),
        samples,
        non_stabilizing,
    })
}

/// Compares `2c₁` with `d₁` beyond their combined uncertainty.
pub fn classify_growth(c1: Constant, d1: Constant, non_stabilizing: bool) -> GrowthClass {
    if non_stabilizing || !(c1.value.is_finite() && d1.value.is_finite()) {
        return GrowthClass::Inconclusive;
    }
    let band = 2.0 * c1.uncertainty + d1.uncertainty + 1e-12 * d1.value.abs().max(1.0);
    let gap = d1.value - 2.0 * c1.value;
    if gap > band {
        GrowthClass::BoundedAS
    } else if gap < -band {
        GrowthClass::UnboundedPositiveProb
    } else {
        GrowthClass::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub rho: f64,
    pub criticality: Criticality,
    pub alpha: f64,
    pub c1_est: Constant,
    pub d1_est: Constant,
    /// `(r, 2 r g(rv)u / σ²(rv))` pairs.
    pub ratio_samples: Vec<(f64, f64)>,
    pub per_radius: Vec<RadiusEstimate>,
    pub classification: GrowthClass,
    /// `|2c₁/d₁ − 1|`.
    pub margin: f64,
    pub non_stabilizing: bool,
    pub sigma2_estimated: bool,
    pub notes: Vec<String>,
}

/// Full criterion evaluation for a model.
pub fn analyze<M: Model + ?Sized>(m: &M, radii: &[f64], opts: &EstimatorOptions) -> Result<CriterionReport> {
    let pd = m.perron();
    let criticality = classify_criticality(pd, opts.criticality_tol);
    let est = estimate_c1_d1(m, radii, opts)?;
    let mut notes = Vec::new();
    let mut classification = classify_growth(est.c1, est.d1, est.non_stabilizing);
    if criticality != Criticality::Critical {
        classification = GrowthClass::Inconclusive;
        notes.push(format!(
            "mean matrix is {criticality:?} (rho = {}); the growth criterion applies to critical models only",
            pd.rho
        ));
    }
    if est.non_stabilizing {
        notes.push("NonStabilizing: last-three-radii spread exceeds the stabilization threshold".into());
    }
    if est.sigma2_estimated {
        notes.push(format!(
            "sigma^2 estimated by one-step Monte Carlo ({} samples per radius)",
            opts.sigma2_samples
        ));
    }
    if est.samples.iter().any(|s| !(s.sigma2 > 0.0)) {
        notes.push("degenerate variance at some radius: growth ratio undefined there".into());
    }
    let margin = (2.0 * est.c1.value / est.d1.value - 1.0).abs();
    Ok(CriterionReport {
        rho: pd.rho,
        criticality,
        alpha: m.alpha(),
        c1_est: est.c1,
        d1_est: est.d1,
        ratio_samples: est.samples.iter().map(|s| (s.r, s.ratio)).collect(),
        per_radius: est.per_radius,
        classification,
        margin,
        non_stabilizing: est.non_stabilizing,
        sigma2_estimated: est.sigma2_estimated,
        notes,
    })
}

/// Closed-form recurrence/transience verdict for a critical GWI process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GwiVerdict {
    pub two_au: f64,
    pub u_v_u: f64,
    pub class: GwiClass,
}

/// Recurrent if `2a·u < uᵀV(v)u`, transient if `>`.
pub fn classify_gwi(m: &GwiModel, criticality_tol: f64) -> Result<GwiVerdict> {
    require_critical(m, criticality_tol)?;
    let pd = m.perron();
    let two_au = 2.0 * m.au();
    let u_v_u = m.u_v_u(&pd.v);
    let class = if (two_au - u_v_u).abs() <= GWI_EQUALITY_TOL * u_v_u.abs().max(1.0) {
        GwiClass::Inconclusive
    } else if two_au < u_v_u {
        GwiClass::Recurrent
    } else {
        GwiClass::Transient
    };
    Ok(GwiVerdict { two_au, u_v_u, class })
}
