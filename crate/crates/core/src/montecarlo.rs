//! Trajectory ensembles and the finite-horizon proxies for growth,
//! extinction and recurrence.
//!
//! `‖X_n‖ → ∞` is not observable. A trajectory counts as a growth-proxy
//! success when `X_T·u > R` and `X_t·u > s` for every `t` after burn-in.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::rng::{domain, stream};
use crate::stats::{median, Estimate, Proportion, Welford};

pub const DEFAULT_S: f64 = 50.0;
pub const DEFAULT_R: f64 = 1e4;
pub const DEFAULT_SIM_CEILING: f64 = 1e9;
/// Fraction of undecided trajectories above which the probe reports `Mixed`.
pub const MIXED_FRACTION: f64 = 0.05;
/// Growth is reported as observed when the Wilson lower bound of the
/// growth-proxy fraction exceeds this floor.
pub const GROWTH_FLOOR: f64 = 0.01;
const HISTOGRAM_BINS: u64 = 20;

pub const PROXY_NOTE: &str = "growth proxy: X_T·u > R and X_t·u > s for every t after burn-in; \
ceiling-crossed trajectories count as growth and are flagged";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: u64,
    pub n_traj: u64,
    pub seed: u64,
    /// Return level `s`.
    pub s: f64,
    /// Growth threshold `R`.
    pub r_growth: f64,
    pub burn_in: u64,
    /// Trajectories stop once `‖x‖₁` exceeds this value.
    pub population_ceiling: f64,
}

impl SimConfig {
    /// Defaults for `s`, `R`, burn-in `T/10` and the ceiling.
    pub fn new(horizon: u64, n_traj: u64, seed: u64) -> Self {
        Self {
            horizon,
            n_traj,
            seed,
            s: DEFAULT_S,
            r_growth: DEFAULT_R,
            burn_in: horizon / 10,
            population_ceiling: DEFAULT_SIM_CEILING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config("simulation", m));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.n_traj == 0 {
            return bad("n_traj must be positive".into());
        }
        if !(self.s > 0.0 && self.s < self.r_growth && self.r_growth.is_finite()) {
            return bad(format!("need 0 < s < R, got s = {}, R = {}", self.s, self.r_growth));
        }
        if self.burn_in >= self.horizon {
            return bad(format!("burn_in {} must be below the horizon {}", self.burn_in, self.horizon));
        }
        if !(self.population_ceiling > self.r_growth) {
            return bad("population_ceiling must exceed R".into());
        }
        Ok(())
    }

    /// Generations at which ensemble means are recorded.
    pub fn checkpoints(&self) -> [u64; 3] {
        [(self.horizon / 4).max(1), (self.horizon / 2).max(1), self.horizon]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: u64,
    pub final_state: Vec<f64>,
    pub final_projection: f64,
    /// Extremes of `x·u` over generations after burn-in (NaN if the path
    /// stopped before burn-in ended).
    pub min_projection: f64,
    pub max_projection: f64,
    /// Entries into `{x·u ≤ s}` after burn-in.
    pub returns_below_s: u64,
    pub absorption_time: Option<u64>,
    pub ceiling_crossed: bool,
    pub overflow: bool,
    /// Generations actually simulated.
    pub steps: u64,
    /// `x·u` at the checkpoints (frozen at the last value when stopped).
    pub checkpoint_projections: Vec<f64>,
}

impl TrajectorySummary {
    pub fn truncated(&self) -> bool {
        self.ceiling_crossed || self.overflow
    }

    pub fn category(&self, cfg: &SimConfig) -> Outcome {
        if self.truncated() {
            return Outcome::Growth;
        }
        if self.final_projection <= cfg.s {
            Outcome::Below
        } else if self.final_projection > cfg.r_growth && !(self.min_projection <= cfg.s) {
            Outcome::Growth
        } else {
            Outcome::Undecided
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Below,
    Growth,
    Undecided,
}

pub fn simulate_trajectory<M: Model + ?Sized>(
    m: &M,
    x0: &[f64],
    cfg: &SimConfig,
    index: u64,
) -> Result<TrajectorySummary> {
    if x0.len() != m.dim() || x0.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("x0 = {x0:?} must be a non-negative state of dimension {}", m.dim())));
    }
    let absorbing = m.absorbing_zero();
    if absorbing && x0.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("x0 must be non-zero for a model absorbed at zero".into()));
    }
    let pd = m.perron();
    let checkpoints = cfg.checkpoints();
    let mut rng = stream(cfg.seed, domain::TRAJECTORY, index);
    let mut x = x0.to_vec();
    let mut y = pd.project(&x);
    let mut summary = TrajectorySummary {
        index,
        final_state: Vec::new(),
        final_projection: y,
        min_projection: f64::NAN,
        max_projection: f64::NAN,
        returns_below_s: 0,
        absorption_time: None,
        ceiling_crossed: false,
        overflow: false,
        steps: 0,
        checkpoint_projections: Vec::with_capacity(3),
    };
    let mut prev_low = false;
    for t in 1..=cfg.horizon {
        match m.step(&x, &mut rng) {
            Ok(next) => x = next,
            Err(Error::Overflow { .. }) => {
                summary.overflow = true;
                break;
            }
            Err(e) => return Err(e),
        }
        y = pd.project(&x);
        summary.steps = t;
        if t > cfg.burn_in {
            let low = y <= cfg.s;
            if low && (t == cfg.burn_in + 1 || !prev_low) {
                summary.returns_below_s += 1;
            }
            prev_low = low;
            summary.min_projection = if t == cfg.burn_in + 1 { y } else { summary.min_projection.min(y) };
            summary.max_projection = if t == cfg.burn_in + 1 { y } else { summary.max_projection.max(y) };
        }
        for &c in &checkpoints {
            if c == t {
                summary.checkpoint_projections.push(y);
            }
        }
        if absorbing && x.iter().all(|&v| v == 0.0) {
            // zero is absorbing: the rest of the path is known
            summary.absorption_time = Some(t);
            if t <= cfg.burn_in {
                summary.min_projection = 0.0;
                summary.max_projection = 0.0;
                summary.returns_below_s = 1;
            }
            break;
        }
        if x.iter().sum::<f64>() > cfg.population_ceiling {
            summary.ceiling_crossed = true;
            break;
        }
    }
    while summary.checkpoint_projections.len() < 3 {
        summary.checkpoint_projections.push(y);
    }
    summary.final_projection = y;
    summary.final_state = x;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: u64,
    pub end: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomyVerdict {
    ExtinctOrBounded,
    GrowthObserved,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    pub below_s: Proportion,
    pub growth: Proportion,
    pub undecided: Proportion,
    pub verdict: DichotomyVerdict,
    pub advice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub model: String,
    pub x0: Vec<f64>,
    pub config: SimConfig,
    /// Present for models absorbed at zero.
    pub survival: Option<Proportion>,
    pub extinction: Option<Proportion>,
    pub growth: Proportion,
    pub mean_final_projection: Estimate,
    /// `(t, mean of X_t·u)` at `T/4`, `T/2`, `T`.
    pub checkpoint_means: Vec<(u64, Estimate)>,
    pub returns_below_s_median: f64,
    pub returns_below_s_mean: f64,
    pub absorption_histogram: Vec<HistogramBin>,
    pub overflow_count: u64,
    pub ceiling_count: u64,
    pub dichotomy: Dichotomy,
    pub proxy_note: String,
}

/// Classifies trajectory outcomes at the horizon.
pub fn classify_outcomes(summaries: &[TrajectorySummary], cfg: &SimConfig) -> Dichotomy {
    let n = summaries.len() as u64;
    let mut counts = [0u64; 3];
    for s in summaries {
        counts[s.category(cfg) as usize] += 1;
    }
    let below_s = Proportion::wilson(counts[Outcome::Below as usize], n);
    let growth = Proportion::wilson(counts[Outcome::Growth as usize], n);
    let undecided = Proportion::wilson(counts[Outcome::Undecided as usize], n);
    let (verdict, advice) = if undecided.fraction > MIXED_FRACTION {
        (
            DichotomyVerdict::Mixed,
            Some(format!(
                "{:.1}% of trajectories end between s and R or dipped below s; increase the horizon",
                100.0 * undecided.fraction
            )),
        )
    } else if growth.lower > GROWTH_FLOOR {
        (DichotomyVerdict::GrowthObserved, None)
    } else {
        (DichotomyVerdict::ExtinctOrBounded, None)
    };
    Dichotomy { below_s, growth, undecided, verdict, advice }
}

/// Simulates all trajectories (in parallel) and returns them in index order.
pub fn simulate_ensemble<M: Model + ?Sized>(m: &M, x0: &[f64], cfg: &SimConfig) -> Result<Vec<TrajectorySummary>> {
    cfg.validate()?;
    (0..cfg.n_traj).into_par_iter().map(|i| simulate_trajectory(m, x0, cfg, i)).collect()
}

/// Aggregates trajectory summaries; sequential and order-fixed.
pub fn aggregate<M: Model + ?Sized>(
    m: &M,
    x0: &[f64],
    cfg: &SimConfig,
    summaries: &[TrajectorySummary],
) -> EnsembleReport {
    let n = summaries.len() as u64;
    let absorbing = m.absorbing_zero();
    let absorbed = summaries.iter().filter(|s| s.absorption_time.is_some()).count() as u64;
    let final_w: Welford = summaries.iter().map(|s| s.final_projection).collect();
    let checkpoint_means = cfg
        .checkpoints()
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, summaries.iter().map(|s| s.checkpoint_projections[k]).collect::<Welford>().estimate()))
        .collect();
    let returns: Vec<f64> = summaries.iter().map(|s| s.returns_below_s as f64).collect();
    let width = cfg.horizon.div_ceil(HISTOGRAM_BINS).max(1);
    let mut absorption_histogram: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|b| HistogramBin { start: b * width + 1, end: (b + 1) * width, count: 0 })
        .filter(|b| b.start <= cfg.horizon)
        .collect();
    for t in summaries.iter().filter_map(|s| s.absorption_time) {
        let b = ((t - 1) / width) as usize;
        absorption_histogram[b].count += 1;
    }
    let dichotomy = classify_outcomes(summaries, cfg);
    EnsembleReport {
        model: m.name().to_string(),
        x0: x0.to_vec(),
        config: *cfg,
        survival: absorbing.then(|| Proportion::wilson(n - absorbed, n)),
        extinction: absorbing.then(|| Proportion::wilson(absorbed, n)),
        growth: dichotomy.growth,
        mean_final_projection: final_w.estimate(),
        checkpoint_means,
        returns_below_s_median: median(&returns),
        returns_below_s_mean: returns.iter().sum::<f64>() / n.max(1) as f64,
        absorption_histogram,
        overflow_count: summaries.iter().filter(|s| s.overflow).count() as u64,
        ceiling_count: summaries.iter().filter(|s| s.ceiling_crossed).count() as u64,
        dichotomy,
        proxy_note: PROXY_NOTE.to_string(),
    }
}

/// `n_traj` trajectories under the per-index stream scheme.
pub fn run_ensemble<M: Model + ?Sized>(m: &M, x0: &[f64], cfg: &SimConfig) -> Result<EnsembleReport> {
    let summaries = simulate_ensemble(m, x0, cfg)?;
    Ok(aggregate(m, x0, cfg, &summaries))
}

pub fn dichotomy_probe<M: Model + ?Sized>(m: &M, x0: &[f64], cfg: &SimConfig) -> Result<Dichotomy> {
    Ok(classify_outcomes(&simulate_ensemble(m, x0, cfg)?, cfg))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Per-trajectory CSV: index, final state, projection extremes, return
/// count and absorption time.
pub fn trajectories_csv(summaries: &[TrajectorySummary]) -> String {
    let mut out = String::from(
        "index,final_state,final_projection,min_projection,max_projection,returns_below_s,absorption_time,ceiling_crossed,overflow\n",
    );
    for s in summaries {
        let state: Vec<String> = s.final_state.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.index,
            state.join(";"),
            fmt_f64(s.final_projection),
            fmt_f64(s.min_projection),
            fmt_f64(s.max_projection),
            s.returns_below_s,
            s.absorption_time.map(|t| t.to_string()).unwrap_or_default(),
            s.ceiling_crossed,
            s.overflow
        );
    }
    out
}
