use critgrowth::criterion::{
    analyze, cell_division_threshold, classify_growth, classify_gwi, estimate_c1_d1, Constant, EstimatorOptions,
    GrowthClass, GwiClass, DEFAULT_RADII,
};
use critgrowth::models::{CellDivisionModel, CellDivisionParams, GwiModel, Model, OffspringLaw};
use critgrowth::config::RunConfig;
use proptest::prelude::*;

/// Two-type offspring laws on {0,1,2}² with the given masses; the mean
/// matrix is then rescaled to criticality by moving mass to (0,0).
fn two_type_gwi(w0: &[f64], w1: &[f64], imm: &[f64]) -> Option<GwiModel> {
    let support: Vec<Vec<u64>> = (0..3).flat_map(|a| (0..3).map(move |b| vec![a, b])).collect();
    let raw = |w: &[f64]| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let laws = [raw(w0), raw(w1)];
    let mean = |p: &[f64]| {
        support.iter().zip(p).fold([0.0; 2], |acc, (s, q)| [acc[0] + q * s[0] as f64, acc[1] + q * s[1] as f64])
    };
    let m = [mean(&laws[0]), mean(&laws[1])];
    // Perron root of a 2x2 matrix
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let rho = 0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt());
    if rho < 1.0 {
        return None;
    }
    // thinning each child independently with probability 1/rho keeps the
    // support and scales the mean matrix to Perron root 1
    let thin = |p: &[f64]| -> OffspringLaw {
        let keep = 1.0 / rho;
        let mut q = vec![0.0; 9];
        for (s, &ps) in support.iter().zip(p) {
            for a in 0..=s[0] {
                for b in 0..=s[1] {
                    let binom = |n: u64, k: u64| {
                        let c = if n == 2 && k == 1 { 2.0 } else { 1.0 };
                        c * keep.powi(k as i32) * (1.0 - keep).powi((n - k) as i32)
                    };
                    q[(a * 3 + b) as usize] += ps * binom(s[0], a) * binom(s[1], b);
                }
            }
        }
        let total: f64 = q.iter().sum();
        OffspringLaw::new(support.clone(), q.iter().map(|x| x / total).collect()).unwrap()
    };
    let imm_total: f64 = imm.iter().sum();
    let immigration = OffspringLaw::new(
        vec![vec![0, 0], vec![1, 0], vec![0, 1]],
        imm.iter().map(|x| x / imm_total).collect(),
    )
    .unwrap();
    GwiModel::new(vec![thin(&laws[0]), thin(&laws[1])], immigration).ok()
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gwi_constants_exact_on_every_radius(w0 in weights(), w1 in weights(), imm in prop::collection::vec(0.01f64..1.0, 3)) {
        let Some(m) = two_type_gwi(&w0, &w1, &imm) else { return Ok(()) };
        prop_assume!((m.perron().rho - 1.0).abs() < 1e-9);
        let est = estimate_c1_d1(&m, &DEFAULT_RADII, &EstimatorOptions::default()).unwrap();
        let uvu = m.u_v_u(&m.perron().v);
        prop_assert!((est.c1.value - m.au()).abs() < 1e-9);
        prop_assert!((est.d1.value - uvu).abs() < 1e-9);
        // closed form and general criterion agree away from equality
        let verdict = classify_gwi(&m, 1e-9).unwrap();
        let growth = classify_growth(est.c1, est.d1, est.non_stabilizing);
        match verdict.class {
            GwiClass::Recurrent => prop_assert!(growth != GrowthClass::UnboundedPositiveProb),
            GwiClass::Transient => prop_assert!(growth != GrowthClass::BoundedAS),
            GwiClass::Inconclusive => {}
        }
    }

    #[test]
    fn classification_is_a_pure_band_rule(c1 in 0.0f64..1.0, d1 in 0.01f64..2.0, uc in 0.0f64..0.1, ud in 0.0f64..0.1) {
        let class = classify_growth(Constant { value: c1, uncertainty: uc }, Constant { value: d1, uncertainty: ud }, false);
        let band = 2.0 * uc + ud + 1e-12 * d1.max(1.0);
        match class {
            GrowthClass::BoundedAS => prop_assert!(d1 - 2.0 * c1 > band),
            GrowthClass::UnboundedPositiveProb => prop_assert!(2.0 * c1 - d1 > band),
            GrowthClass::Inconclusive => prop_assert!((d1 - 2.0 * c1).abs() <= band),
        }
    }

    #[test]
    fn threshold_is_a_convex_combination(p in 0.01f64..0.99, q in 0.01f64..0.99, b1 in 0.0f64..1.0, b2 in 0.0f64..1.0) {
        let t = cell_division_threshold(p, q, b1, b2).unwrap();
        prop_assert!(t >= b1.min(b2) - 1e-15 && t <= b1.max(b2) + 1e-15);
    }
}

#[test]
fn cell_division_criterion_matches_threshold_with_unequal_rates() {
    // p != p' and b1 != b2: the general criterion must reproduce the weighted threshold
    for (p, q, b1, b2) in [(0.3, 0.6, 0.1, 0.25), (0.6, 0.2, 0.15, 0.05)] {
        let t = cell_division_threshold(p, q, b1, b2).unwrap();
        // c1 < 1 - max(p, p') and c2 < min(p, p') keep every marginal below 1
        let (hi, lo) = (f64::max(p, q), f64::min(p, q));
        for sum in [0.5 * t, 2.0 * t] {
            let share = (1.0 - hi) / (1.0 - hi + lo);
            let params = CellDivisionParams::new(p, q, sum * share, sum * (1.0 - share), b1, b2);
            let m = CellDivisionModel::cell_division(params).unwrap();
            let rep = analyze(&m, &DEFAULT_RADII, &EstimatorOptions::default()).unwrap();
            let expected = if sum < t { GrowthClass::BoundedAS } else { GrowthClass::UnboundedPositiveProb };
            assert_eq!(rep.classification, expected, "p={p} q={q} b=({b1},{b2}) sum={sum} t={t}");
        }
    }
}

#[test]
fn ratio_stabilizes_for_shipped_configs() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        let built = cfg.build_model().unwrap();
        let rep = analyze(built.as_model(), &cfg.criterion.radii, &cfg.estimator_options()).unwrap();
        assert!(!rep.non_stabilizing, "{path:?}");
        let tail: Vec<f64> = rep.ratio_samples[rep.ratio_samples.len() - 3..].iter().map(|s| s.1).collect();
        let spread = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
        let last = tail[2];
        assert!(spread < cfg.criterion.stabilization * last.abs(), "{path:?}: spread {spread} at ratio {last}");
        seen += 1;
    }
    assert_eq!(seen, 5);
}
