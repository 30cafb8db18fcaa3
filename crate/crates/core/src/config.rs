//! TOML run configuration shared by every subcommand.
//!
//! A file holds exactly one model block under `[model]` (selected by
//! `model.kind`) plus optional `[spectral]`, `[criterion]`, `[lyapunov]`,
//! `[audit]`, `[simulation]` and `[output]` sections. The full schema is in
//! `docs/config.md`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criterion::{EstimatorOptions, DEFAULT_RADII, DEFAULT_SIGMA2_SAMPLES, DEFAULT_STABILIZATION};
use crate::error::{Error, Result};
use crate::lyapunov::{AuditOptions, Phi, ProbeOptions, DEFAULT_BAND, DEFAULT_MAGNITUDES};
use crate::models::{
    CellDivisionModel, CellDivisionParams, GwiModel, MixtureGenerator, MixtureType, Model, OffspringLaw,
    SdgwModel, DEFAULT_POPULATION_CEILING,
};
use crate::montecarlo::{SimConfig, DEFAULT_R, DEFAULT_S, DEFAULT_SIM_CEILING};
use crate::spectral::{DEFAULT_CRITICALITY_TOL, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gwi,
    Sdgw,
    CellDivision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GwiSpec {
    pub offspring: Vec<OffspringLaw>,
    pub immigration: OffspringLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdgwSpec {
    pub types: Vec<MixtureType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Total parent count above which offspring sums are drawn from their
    /// Gaussian approximation.
    #[serde(default = "default_gaussian_threshold")]
    pub gaussian_threshold: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gwi: Option<GwiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdgw: Option<SdgwSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_division: Option<CellDivisionParams>,
}

fn default_gaussian_threshold() -> u64 {
    DEFAULT_POPULATION_CEILING
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSection {
    pub tol: f64,
    pub max_iter: usize,
    pub criticality_tol: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, criticality_tol: DEFAULT_CRITICALITY_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriterionSection {
    pub radii: Vec<f64>,
    pub sigma2_samples: u64,
    pub stabilization: f64,
}

impl Default for CriterionSection {
    fn default() -> Self {
        Self {
            radii: DEFAULT_RADII.to_vec(),
            sigma2_samples: DEFAULT_SIGMA2_SAMPLES,
            stabilization: DEFAULT_STABILIZATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSection {
    pub phi: Vec<Phi>,
    /// u-projections of the ray states.
    pub magnitudes: Vec<f64>,
    pub off_ray: bool,
    pub k_max: usize,
    /// Step count of the moment scan; defaults to the smallest k found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_k: Option<usize>,
    pub n_samples: u64,
    pub band: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self {
            phi: vec![Phi::Log, Phi::InvLog],
            magnitudes: DEFAULT_MAGNITUDES.to_vec(),
            off_ray: true,
            k_max: 64,
            moment_k: None,
            n_samples: 10_000,
            band: DEFAULT_BAND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub samples: u64,
    pub annuli: Vec<[f64; 2]>,
    pub balls: Vec<f64>,
}

impl Default for AuditSection {
    fn default() -> Self {
        let d = AuditOptions::default();
        Self { samples: d.samples, annuli: d.annuli.iter().map(|&(a, b)| [a, b]).collect(), balls: d.balls }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub x0: Vec<f64>,
    pub horizon: u64,
    pub n_traj: u64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_r")]
    pub r_growth: f64,
    /// Defaults to `horizon / 10`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default = "default_ceiling")]
    pub population_ceiling: f64,
}

fn default_s() -> f64 {
    DEFAULT_S
}
fn default_r() -> f64 {
    DEFAULT_R
}
fn default_ceiling() -> f64 {
    DEFAULT_SIM_CEILING
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), format: Format::Json }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for every random stream of the run.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub criterion: CriterionSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A model built from its configuration block.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Gwi(GwiModel),
    Sdgw(SdgwModel<MixtureGenerator>),
    CellDivision(CellDivisionModel),
}

impl BuiltModel {
    pub fn as_model(&self) -> &dyn Model {
        match self {
            BuiltModel::Gwi(m) => m,
            BuiltModel::Sdgw(m) => m,
            BuiltModel::CellDivision(m) => m,
        }
    }
}

fn err(path: &str, message: impl Into<String>) -> Error {
    Error::config(path, message.into())
}

impl RunConfig {
    /// Reads, parses and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Parses and validates TOML text. Schema errors name the offending key.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            err(&path, inner.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.build_model()?;
        let d = model.as_model().dim();
        let s = &self.spectral;
        if !(s.tol > 0.0 && s.criticality_tol > 0.0 && s.max_iter > 0) {
            return Err(err("spectral", "tol, criticality_tol and max_iter must be positive"));
        }
        let c = &self.criterion;
        if c.radii.len() < 3 || c.radii[0] <= 0.0 || c.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(err("criterion.radii", "need at least three positive, strictly increasing radii"));
        }
        if c.sigma2_samples == 0 || !(c.stabilization > 0.0) {
            return Err(err("criterion", "sigma2_samples and stabilization must be positive"));
        }
        let l = &self.lyapunov;
        if l.magnitudes.is_empty() || l.magnitudes.iter().any(|&m| !(m > 3.0 && m.is_finite())) {
            return Err(err("lyapunov.magnitudes", "need at least one finite magnitude above 3"));
        }
        if l.k_max == 0 || l.n_samples == 0 || l.moment_k == Some(0) || !(l.band >= 0.0) {
            return Err(err("lyapunov", "k_max, n_samples and moment_k must be positive; band non-negative"));
        }
        let a = &self.audit;
        if a.samples == 0 || a.annuli.iter().any(|[lo, hi]| !(*lo >= 0.0 && hi > lo)) {
            return Err(err("audit", "samples must be positive and every annulus needs 0 <= a < b"));
        }
        if let Some(sim) = &self.simulation {
            if sim.x0.len() != d {
                return Err(err("simulation.x0", format!("expected {d} coordinates, got {}", sim.x0.len())));
            }
            if sim.x0.iter().any(|&v| !(v >= 0.0 && v.fract() == 0.0)) {
                return Err(err("simulation.x0", "coordinates must be non-negative integers"));
            }
            let absorbing = model.as_model().absorbing_zero();
            if absorbing && sim.x0.iter().all(|&v| v == 0.0) {
                return Err(err("simulation.x0", "x0 must be non-zero for a model absorbed at zero"));
            }
            self.sim_config().expect("simulation present").validate()?;
        }
        Ok(())
    }

    /// Builds the model selected by `model.kind`; exactly one block must be
    /// present and it must match the kind.
    pub fn build_model(&self) -> Result<BuiltModel> {
        let m = &self.model;
        let present: Vec<&str> = [
            m.gwi.as_ref().map(|_| "gwi"),
            m.sdgw.as_ref().map(|_| "sdgw"),
            m.cell_division.as_ref().map(|_| "cell_division"),
        ]
        .into_iter()
        .flatten()
        .collect();
        if present.len() != 1 {
            return Err(err("model", format!("exactly one model block is required, found {present:?}")));
        }
        let ceiling = m.gaussian_threshold;
        let built = match m.kind {
            ModelKind::Gwi => {
                let spec = m.gwi.as_ref().ok_or_else(|| err("model.kind", "kind = \"gwi\" needs a [model.gwi] block"))?;
                BuiltModel::Gwi(
                    GwiModel::new(spec.offspring.clone(), spec.immigration.clone())?.with_population_ceiling(ceiling),
                )
            }
            ModelKind::Sdgw => {
                let spec =
                    m.sdgw.as_ref().ok_or_else(|| err("model.kind", "kind = \"sdgw\" needs a [model.sdgw] block"))?;
                BuiltModel::Sdgw(SdgwModel::new(MixtureGenerator::new(spec.types.clone())?)?.with_population_ceiling(ceiling))
            }
            ModelKind::CellDivision => {
                let spec = m
                    .cell_division
                    .as_ref()
                    .ok_or_else(|| err("model.kind", "kind = \"cell_division\" needs a [model.cell_division] block"))?;
                BuiltModel::CellDivision(CellDivisionModel::cell_division(spec.clone())?.with_population_ceiling(ceiling))
            }
        };
        Ok(built)
    }

    pub fn sim_config(&self) -> Option<SimConfig> {
        self.simulation.as_ref().map(|s| SimConfig {
            horizon: s.horizon,
            n_traj: s.n_traj,
            seed: self.seed,
            s: s.s,
            r_growth: s.r_growth,
            burn_in: s.burn_in.unwrap_or(s.horizon / 10),
            population_ceiling: s.population_ceiling,
        })
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            sigma2_samples: self.criterion.sigma2_samples,
            seed: self.seed,
            stabilization: self.criterion.stabilization,
            criticality_tol: self.spectral.criticality_tol,
        }
    }

    pub fn probe_options(&self) -> ProbeOptions {
        ProbeOptions { n_samples: self.lyapunov.n_samples, seed: self.seed, band: self.lyapunov.band }
    }

    pub fn audit_options(&self) -> AuditOptions {
        AuditOptions {
            samples: self.audit.samples,
            seed: self.seed,
            annuli: self.audit.annuli.iter().map(|&[a, b]| (a, b)).collect(),
            balls: self.audit.balls.clone(),
        }
    }
}
