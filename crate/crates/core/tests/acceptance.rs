//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with
//! `cargo test --release -p critgrowth --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use critgrowth::commands;
use critgrowth::config::RunConfig;
use critgrowth::criterion::{
    analyze, cell_division_threshold, classify_gwi, EstimatorOptions, GrowthClass, GwiClass, DEFAULT_RADII,
};
use critgrowth::lyapunov::{check_supermartingale, ray_grid, scan_k, Phi, ProbeOptions};
use critgrowth::models::{CellDivisionModel, CellDivisionParams, GwiModel, OffspringLaw};
use critgrowth::montecarlo::{run_ensemble, SimConfig};
use critgrowth::spectral::{contraction_factor, is_primitive, perron_default};
use critgrowth::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> Result<RunConfig, String> {
    RunConfig::load(configs_dir().join(name)).map_err(|e| e.to_string())
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eigendata() -> Outcome {
    let m = Matrix::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).map_err(|e| e.to_string())?;
    let pd = perron_default(&m).map_err(|e| e.to_string())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = [s, s];
    let v = [2f64.sqrt() * 6.0 / 13.0, 2f64.sqrt() * 7.0 / 13.0];
    let mut err: f64 = (pd.rho - 1.0).abs();
    for i in 0..2 {
        err = err.max((pd.u[i] - u[i]).abs()).max((pd.v[i] - v[i]).abs());
    }
    let uu: f64 = pd.u.iter().map(|x| x * x).sum();
    let vu: f64 = pd.v.iter().zip(&pd.u).map(|(a, b)| a * b).sum();
    let norm_err = (uu - 1.0).abs().max((vu - 1.0).abs());
    ensure(err < 1e-10 && norm_err < 1e-12, format!("max eigendata error {err:.2e}, normalization error {norm_err:.2e}"))
}

fn contraction() -> Outcome {
    let m = Matrix::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).map_err(|e| e.to_string())?;
    let pd = perron_default(&m).map_err(|e| e.to_string())?;
    let lambda = contraction_factor(&m, &pd, 1e-9).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let d = rng.random_range(1..=4usize);
        let entries: Vec<f64> =
            (0..d * d).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.05..1.0) }).collect();
        let raw = Matrix::from_row_major(d, entries).map_err(|e| e.to_string())?;
        if !is_primitive(&raw) {
            continue;
        }
        let rho = perron_default(&raw).map_err(|e| e.to_string())?.rho;
        let critical = raw.scaled(1.0 / rho).map_err(|e| e.to_string())?;
        let pd = perron_default(&critical).map_err(|e| e.to_string())?;
        let l = contraction_factor(&critical, &pd, 1e-9).map_err(|e| e.to_string())?;
        worst = worst.max(l);
        checked += 1;
    }
    ensure(
        (lambda - 0.3).abs() < 1e-8 && worst < 1.0,
        format!("lambda = {lambda:.12}; max over {checked} random critical matrices {worst:.6}"),
    )
}

fn closed_form_grid() -> Outcome {
    let (mut agree, mut cells, mut excluded) = (0, 0, 0);
    let mut misses = Vec::new();
    for p in [0.3f64, 0.4, 0.5, 0.6, 0.7] {
        for b in [0.05f64, 0.1, 0.15, 0.2, 0.25] {
            for c in [0.02f64, 0.1, 0.3, 0.5, 0.7] {
                let threshold = cell_division_threshold(p, p, b, b).map_err(|e| e.to_string())?;
                if (c - threshold).abs() < 0.025 {
                    excluded += 1;
                    continue;
                }
                cells += 1;
                let params = CellDivisionParams::new(p, p, c * (1.0 - p), c * p, b, b);
                let m = CellDivisionModel::cell_division(params).map_err(|e| format!("p={p} b={b} c={c}: {e}"))?;
                let rep = analyze(&m, &DEFAULT_RADII, &EstimatorOptions::default()).map_err(|e| e.to_string())?;
                let expected = if c > threshold { GrowthClass::UnboundedPositiveProb } else { GrowthClass::BoundedAS };
                if rep.classification == expected {
                    agree += 1;
                } else {
                    misses.push(format!("(p={p}, b={b}, c={c}): {:?}", rep.classification));
                }
            }
        }
    }
    ensure(agree == cells, format!("{agree}/{cells} cells agree, {excluded} excluded near the threshold {misses:?}"))
}

fn gwi_mean_recursion() -> Outcome {
    let cfg = shipped("gwi_recurrent.toml")?;
    let built = cfg.build_model().map_err(|e| e.to_string())?;
    let m = built.as_model();
    let x0 = cfg.simulation.as_ref().ok_or("no simulation section")?.x0.clone();
    let base = cfg.sim_config().ok_or("no simulation section")?;
    let sim = SimConfig { horizon: 500, n_traj: 10_000, burn_in: 50, ..base };
    let rep = run_ensemble(m, &x0, &sim).map_err(|e| e.to_string())?;
    let au = m.perron().project(&m.drift(&x0).map_err(|e| e.to_string())?);
    let expected = m.perron().project(&x0) + 500.0 * au;
    let (_, est) = rep.checkpoint_means.last().ok_or("no checkpoints")?;
    let z = (est.value - expected) / est.se;
    ensure(z.abs() < 4.0, format!("mean X_T·u = {:.3} ± {:.3}, exact {expected:.3}, z = {z:.2}", est.value, est.se))
}

fn dichotomy() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, want_growth) in [("cell_division_extinct.toml", false), ("cell_division_survive.toml", true)] {
        let cfg = shipped(name)?;
        let built = cfg.build_model().map_err(|e| e.to_string())?;
        let x0 = cfg.simulation.as_ref().ok_or("no simulation section")?.x0.clone();
        let sim = cfg.sim_config().ok_or("no simulation section")?;
        if sim.horizon != 10_000 || sim.n_traj != 10_000 {
            return Err(format!("{name}: expected T = n_traj = 1e4"));
        }
        let rep = run_ensemble(built.as_model(), &x0, &sim).map_err(|e| e.to_string())?;
        let g = rep.growth;
        ok &= if want_growth { g.fraction > 0.05 } else { g.fraction < 0.01 };
        detail.push(format!("{name}: growth {:.4} [{:.4}, {:.4}]", g.fraction, g.lower, g.upper));
    }
    ensure(ok, detail.join("; "))
}

fn recurrence_contrast() -> Outcome {
    let rec = shipped("gwi_recurrent.toml")?;
    let tra = shipped("gwi_transient.toml")?;
    let mut detail = Vec::new();
    let mut ok = true;
    for seed in 1..=5u64 {
        let mut medians = [0.0; 2];
        for (slot, cfg) in [&rec, &tra].into_iter().enumerate() {
            let built = cfg.build_model().map_err(|e| e.to_string())?;
            let x0 = cfg.simulation.as_ref().ok_or("no simulation section")?.x0.clone();
            let sim = SimConfig { seed, ..cfg.sim_config().ok_or("no simulation section")? };
            if sim.horizon != 10_000 || sim.s != 50.0 {
                return Err("expected T = 1e4 and s = 50".into());
            }
            medians[slot] = run_ensemble(built.as_model(), &x0, &sim).map_err(|e| e.to_string())?.returns_below_s_median;
        }
        ok &= medians[0] > medians[1];
        detail.push(format!("seed {seed}: {} vs {}", medians[0], medians[1]));
    }
    ensure(ok, format!("median returns below s, recurrent vs transient: {}", detail.join(", ")))
}

fn lyapunov_scans() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, phi) in [("cell_division_survive.toml", Phi::InvLog), ("cell_division_extinct.toml", Phi::Log)] {
        let cfg = shipped(name)?;
        let built = cfg.build_model().map_err(|e| e.to_string())?;
        let m = built.as_model();
        let grid = ray_grid(m, &[1e2, 1e3, 1e4]);
        let opts = ProbeOptions { n_samples: 40_000, seed: cfg.seed, band: 2.0 };
        let scan = scan_k(m, phi, &grid, 64, &opts).map_err(|e| e.to_string())?;
        match scan.found_k {
            Some(k) => {
                let worst = scan.records_at(k).iter().map(|r| r.gap + 2.0 * r.se).fold(f64::MIN, f64::max);
                detail.push(format!("{name} {phi:?}: k = {k}, max gap + 2SE = {worst:.3e}"));
            }
            None => {
                ok = false;
                detail.push(format!("{name} {phi:?}: no k <= 64"));
            }
        }
    }
    ensure(ok, detail.join("; "))
}

fn law(support: &[&[u64]], probs: &[f64]) -> Result<OffspringLaw, String> {
    OffspringLaw::new(support.iter().map(|s| s.to_vec()).collect(), probs.to_vec()).map_err(|e| e.to_string())
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn enumeration_oracle() -> Outcome {
    let offspring = [0.25, 0.5, 0.25];
    let immigration = [0.7, 0.3];
    let x = 20usize;
    let m = GwiModel::new(vec![law(&[&[0], &[1], &[2]], &offspring)?], law(&[&[0], &[1]], &immigration)?)
        .map_err(|e| e.to_string())?;
    let mut dist = vec![1.0];
    for _ in 0..x {
        dist = convolve(&dist, &offspring);
    }
    dist = convolve(&dist, &immigration);
    let (mut num, mut mass) = (0.0, 0.0);
    for (y, p) in dist.iter().enumerate().skip(1) {
        num += p * (y as f64).ln();
        mass += p;
    }
    let exact = num / mass - (x as f64).ln();
    let rec = check_supermartingale(&m, Phi::Log, &[x as f64], 1, &ProbeOptions { n_samples: 200_000, seed: 8, band: 2.0 })
        .map_err(|e| e.to_string())?;
    let z = (rec.gap - exact) / rec.se;

    // scalar rule: recurrent iff 2a < σ²
    let mut mismatches = Vec::new();
    for (off, p1) in [([0.25, 0.5, 0.25], 0.1), ([0.25, 0.5, 0.25], 0.4), ([0.4, 0.2, 0.4], 0.3), ([0.4, 0.2, 0.4], 0.5)] {
        let g = GwiModel::new(vec![law(&[&[0], &[1], &[2]], &off)?], law(&[&[0], &[1]], &[1.0 - p1, p1])?)
            .map_err(|e| e.to_string())?;
        let var = off[0] * 1.0 + off[2] * 1.0;
        let expected = if 2.0 * p1 < var { GwiClass::Recurrent } else { GwiClass::Transient };
        let v = classify_gwi(&g, 1e-9).map_err(|e| e.to_string())?;
        if v.class != expected || (v.two_au - 2.0 * p1).abs() > 1e-12 || (v.u_v_u - var).abs() > 1e-12 {
            mismatches.push(format!("{off:?}/{p1}: {v:?}"));
        }
    }
    ensure(
        z.abs() < 3.0 && mismatches.is_empty(),
        format!("gap {:.6} ± {:.6} vs exact {exact:.6} (z = {z:.2}); classify_gwi mismatches {mismatches:?}", rec.gap, rec.se),
    )
}

fn reduced(name: &str) -> Result<RunConfig, String> {
    let mut cfg = shipped(name)?;
    cfg.lyapunov.n_samples = 500;
    cfg.lyapunov.k_max = 4;
    cfg.audit.samples = 500;
    cfg.criterion.sigma2_samples = cfg.criterion.sigma2_samples.min(2000);
    if let Some(s) = cfg.simulation.as_mut() {
        s.horizon = 500;
        s.n_traj = 200;
        s.burn_in = Some(50);
    }
    Ok(cfg)
}

fn run_all(cfg: &RunConfig) -> Result<Vec<commands::Artifact>, String> {
    let mut out = Vec::new();
    for cmd in [commands::analyze, commands::simulate, commands::lyapunov, commands::audit] {
        out.extend(cmd(cfg).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn reproducibility() -> Outcome {
    let mut files = 0;
    for entry in std::fs::read_dir(configs_dir()).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name().to_string_lossy().to_string();
        let cfg = reduced(&name)?;
        let a = run_all(&cfg)?;
        let b = run_all(&cfg)?;
        // a single worker thread must give the same bytes as the default pool
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
        let c = pool.install(|| run_all(&cfg))?;
        if a != b || a != c {
            return Err(format!("{name}: artifacts differ between runs"));
        }
        files += a.len();
    }
    Ok(format!("{files} artifacts byte-identical across repeated and single-threaded runs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("eigendata exactness", eigendata),
        ("contraction check", contraction),
        ("closed-form criterion agreement", closed_form_grid),
        ("GWI mean recursion", gwi_mean_recursion),
        ("dichotomy at desk scale", dichotomy),
        ("recurrence/transience contrast", recurrence_contrast),
        ("Lyapunov verification", lyapunov_scans),
        ("brute-force oracle equivalence", enumeration_oracle),
        ("reproducibility", reproducibility),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n} ({name}): PASS  {d}  [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL  {d}  [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
