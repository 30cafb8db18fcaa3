//! The four batch commands. Each returns named artifacts (JSON reports and
//! CSV tables) that embed the resolved configuration and master seed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::config::{BuiltModel, RunConfig};
use crate::criterion::{
    analyze as analyze_criterion, cell_division_threshold, classify_criticality, classify_gwi, estimate_c1_d1,
    Criticality, GrowthClass,
};
use crate::error::{Error, Result};
use crate::lyapunov::{assumption_audit, default_grid, moment_scan, scan_k, GapRecord, MomentScan, Phi, Verdict};
use crate::montecarlo::{aggregate, simulate_ensemble, trajectories_csv};
use crate::spectral::{contraction_factor, perron};

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

impl Artifact {
    fn json<T: Serialize>(command: &str, cfg: &RunConfig, report: &T) -> Result<Self> {
        let value = json!({
            "command": command,
            "seed": cfg.seed,
            "config": cfg,
            "report": report,
        });
        let contents = serde_json::to_string_pretty(&value)
            .map_err(|e| Error::Domain(format!("report serialization failed: {e}")))?;
        Ok(Self { file_name: format!("{command}.json"), contents: contents + "\n" })
    }

    fn csv(command: &str, table: &str, cfg: &RunConfig, body: String) -> Self {
        Self {
            file_name: format!("{command}_{table}.csv"),
            contents: format!("# seed={} model={:?}\n{body}", cfg.seed, cfg.model.kind),
        }
    }
}

/// Writes artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for a in artifacts {
        let p = dir.join(&a.file_name);
        fs::write(&p, &a.contents).map_err(io(&p))?;
    }
    Ok(())
}

fn emit<T: Serialize>(command: &str, cfg: &RunConfig, report: &T, tables: Vec<(&str, String)>) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    if cfg.output.format.json() {
        out.push(Artifact::json(command, cfg, report)?);
    }
    if cfg.output.format.csv() {
        out.extend(tables.into_iter().map(|(t, body)| Artifact::csv(command, t, cfg, body)));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ClosedForm {
    threshold: f64,
    c1_plus_c2: f64,
    verdict: GrowthClass,
    perturbation: String,
}

/// Perron data, contraction factor and the growth criterion, plus the
/// closed-form verdicts available for the model family.
pub fn analyze(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let built = cfg.build_model()?;
    let m = built.as_model();
    let pd = perron(m.mean_matrix(), cfg.spectral.tol, cfg.spectral.max_iter)?;
    let criticality = classify_criticality(&pd, cfg.spectral.criticality_tol);
    let lambda = match criticality {
        Criticality::Critical => Some(contraction_factor(m.mean_matrix(), &pd, cfg.spectral.criticality_tol)?),
        _ => None,
    };
    let criterion = analyze_criterion(m, &cfg.criterion.radii, &cfg.estimator_options())?;
    let (gwi, standing, closed_form) = match &built {
        BuiltModel::Gwi(g) => {
            let verdict = match criticality {
                Criticality::Critical => Some(classify_gwi(g, cfg.spectral.criticality_tol)?),
                _ => None,
            };
            (verdict, g.standing_assumption_violations(), None)
        }
        BuiltModel::CellDivision(c) => {
            let p = c.generator().params();
            let threshold = cell_division_threshold(p.p, p.p_prime, p.b1, p.b2)?;
            let sum = p.c1 + p.c2;
            let verdict = if sum < threshold {
                GrowthClass::BoundedAS
            } else if sum > threshold {
                GrowthClass::UnboundedPositiveProb
            } else {
                GrowthClass::Inconclusive
            };
            let perturbation = format!(
                "b_i(z) = b_i + beta_i / (1 + |z|) with beta = ({}, {}); the perturbation family is an implementation choice",
                p.beta1, p.beta2
            );
            (None, Vec::new(), Some(ClosedForm { threshold, c1_plus_c2: sum, verdict, perturbation }))
        }
        BuiltModel::Sdgw(_) => (None, Vec::new(), None),
    };
    let report = json!({
        "perron": pd,
        "criticality": criticality,
        "contraction_factor": lambda,
        "criterion": criterion,
        "gwi": gwi,
        "gwi_standing_assumption_violations": standing,
        "cell_division": closed_form,
    });
    let mut csv = String::from("r,ratio\n");
    for (r, ratio) in &criterion.ratio_samples {
        let _ = writeln!(csv, "{r},{ratio}");
    }
    emit("analyze", cfg, &report, vec![("ratio_samples", csv)])
}

/// Trajectory ensemble and dichotomy probe.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let sim = cfg.sim_config().ok_or_else(|| Error::config("simulation", "simulate needs a [simulation] section"))?;
    let x0 = cfg.simulation.as_ref().map(|s| s.x0.clone()).unwrap_or_default();
    let built = cfg.build_model()?;
    let m = built.as_model();
    let summaries = simulate_ensemble(m, &x0, &sim)?;
    let report = aggregate(m, &x0, &sim, &summaries);
    emit("simulate", cfg, &report, vec![("trajectories", trajectories_csv(&summaries))])
}

#[derive(Debug, Serialize)]
pub struct LyapunovReport {
    pub phi: Phi,
    pub states: Vec<Vec<f64>>,
    /// Smallest k with every state `Satisfied`; `None` means not found up
    /// to `k_max`.
    pub found_k: Option<usize>,
    pub k_max: usize,
    /// Step count of `records`: the found k, else `k_max`.
    pub k: usize,
    pub s: f64,
    pub samples: u64,
    pub band: f64,
    pub records: Vec<GapRecord>,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Satisfied => "Satisfied",
        Verdict::Violated => "Violated",
        Verdict::Indeterminate => "Indeterminate",
    }
}

/// Supermartingale scans for each configured `φ` and the moment scan.
pub fn lyapunov(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let built = cfg.build_model()?;
    let m = built.as_model();
    let l = &cfg.lyapunov;
    let grid = default_grid(m, &l.magnitudes, l.off_ray);
    let opts = cfg.probe_options();
    let mut reports = Vec::new();
    let mut gaps = String::from("phi,k,state,projection,gap,se,absorption_fraction,verdict\n");
    for &phi in &l.phi {
        let scan = scan_k(m, phi, &grid, l.k_max, &opts)?;
        for row in &scan.table {
            for r in row {
                let state: Vec<String> = r.state.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(
                    gaps,
                    "{:?},{},{},{},{},{},{},{}",
                    phi,
                    r.k,
                    state.join(";"),
                    r.projection,
                    r.gap,
                    r.se,
                    r.absorption_fraction,
                    verdict_name(r.verdict)
                );
            }
        }
        let k = scan.found_k.unwrap_or(l.k_max);
        reports.push(LyapunovReport {
            phi,
            states: grid.clone(),
            found_k: scan.found_k,
            k_max: l.k_max,
            k,
            s: scan.s,
            samples: opts.n_samples,
            band: opts.band,
            records: scan.records_at(k).to_vec(),
        });
    }
    let moment_k = l.moment_k.or_else(|| reports.iter().filter_map(|r| r.found_k).min()).unwrap_or(1);
    let est = estimate_c1_d1(m, &cfg.criterion.radii, &cfg.estimator_options())?;
    let moments: MomentScan = moment_scan(m, &grid, moment_k, est.c1.value, est.d1.value, &opts)?;
    let mut mcsv =
        String::from("state,projection,transverse_norm,k,mean_delta,mean_delta_se,mean_delta_sq,mean_delta_sq_se,resid_mean,resid_second\n");
    for e in &moments.entries {
        let state: Vec<String> = e.state.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            mcsv,
            "{},{},{},{},{},{},{},{},{},{}",
            state.join(";"),
            e.projection,
            e.transverse_norm,
            e.k,
            e.mean_delta.value,
            e.mean_delta.se,
            e.mean_delta_sq.value,
            e.mean_delta_sq.se,
            e.resid_mean.value,
            e.resid_second.value
        );
    }
    let report = json!({ "supermartingale": reports, "moments": moments });
    emit("lyapunov", cfg, &report, vec![("gaps", gaps), ("moments", mcsv)])
}

/// Assumption audit plus model-specific structural checks.
pub fn audit(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let built = cfg.build_model()?;
    let m = built.as_model();
    let grid = default_grid(m, &cfg.lyapunov.magnitudes, cfg.lyapunov.off_ray);
    let rep = assumption_audit(m, &grid, &cfg.audit_options())?;
    let mut findings = Vec::new();
    match &built {
        BuiltModel::Gwi(g) => findings.extend(g.standing_assumption_violations()),
        BuiltModel::Sdgw(s) => {
            if let Err(e) = s.audit_states(grid.iter().map(Vec::as_slice)) {
                findings.push(e.to_string());
            }
        }
        BuiltModel::CellDivision(c) => {
            if let Err(e) = c.audit_states(grid.iter().map(Vec::as_slice)) {
                findings.push(e.to_string());
            }
        }
    }
    if rep.a4_violated {
        findings.push("A4: drift along u is not bounded away from 0 on some annulus".into());
    }
    if rep.degenerate_variance {
        findings.push("sigma^2 vanishes at some grid state: the growth ratio is undefined there".into());
    }
    findings.push("A3 is checked through a proxy (positive probability of a strict u-increase), not verified".into());
    let report = json!({ "audit": rep, "findings": findings });
    let mut csv = String::from("projection,ratio,se\n");
    for r in &rep.a2_ratios {
        let _ = writeln!(csv, "{},{},{}", r.projection, r.ratio, r.se);
    }
    emit("audit", cfg, &report, vec![("moment_ratios", csv)])
}
