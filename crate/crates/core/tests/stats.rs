//! Trial statistics against definitional oracles.

mod common;

use pearl::baseline::Period;
use pearl::domain::Arm;
use pearl::stats::{
    bh_adjust, did_regression, gee_fit, ols_fit, summarize_periods, table4, table6_design, GeeCluster, GeeData,
    GeeOptions, StatsError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{panel_of, sample_sd, series};

/// adj_(i) = min over j >= i of m p_(j) / j, by direct enumeration.
fn bh_oracle(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut sorted: Vec<(usize, f64)> = p.iter().copied().enumerate().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = vec![0.0; m];
    for i in 0..m {
        let best = (i..m).map(|j| m as f64 * sorted[j].1 / (j + 1) as f64).fold(f64::INFINITY, f64::min);
        out[sorted[i].0] = best.min(1.0);
    }
    out
}

#[test]
fn bh_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2_000 {
        let m = rng.random_range(1..=6);
        let p: Vec<f64> = (0..m).map(|_| if rng.random::<f64>() < 0.2 { 0.05 } else { rng.random() }).collect();
        let got = bh_adjust(&p);
        let want = bh_oracle(&p);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-15, "{p:?}: {got:?} vs {want:?}");
        }
        for (g, q) in got.iter().zip(&p) {
            assert!(*g >= q * (1.0 - 1e-15));
        }
    }
}

fn constant(v: u32) -> Vec<u32> {
    vec![v; 30]
}

#[test]
fn period_summary_examples() {
    let panel = panel_of(vec![
        (Arm::Rl, series(0, &constant(4_000), &constant(4_000))),
        (Arm::Rl, series(1, &constant(6_000), &constant(6_000))),
        (Arm::Control, series(2, &constant(5_000), &constant(5_000))),
    ]);
    let s = summarize_periods(&panel);
    let rl = s.cell(Arm::Rl, Period::Baseline).unwrap();
    assert_eq!(rl.mean, 5_000.0);
    assert!((rl.sd - 1_414.213_562_373_095).abs() < 1e-6);
    let c = s.cell(Arm::Control, Period::Month1).unwrap();
    assert_eq!((c.mean, c.sd, c.n), (5_000.0, 0.0, 1));
    // Study covered 30 days, so month 2 has no compliant participant.
    assert!(s.cell(Arm::Control, Period::Month2).is_none_or(|c| c.n == 0));
}

#[test]
fn noncompliant_participants_are_excluded() {
    let mut thin = constant(5_000);
    for v in thin.iter_mut().skip(6) {
        *v = 200; // only six wear days
    }
    let panel = panel_of(vec![
        (Arm::Rl, series(0, &constant(5_000), &thin)),
        (Arm::Rl, series(1, &constant(5_000), &constant(5_500))),
    ]);
    let s = summarize_periods(&panel);
    assert_eq!(s.cell(Arm::Rl, Period::Month1).unwrap().n, 1);
    assert_eq!(s.cell(Arm::Rl, Period::Baseline).unwrap().n, 2);
}

#[test]
fn did_saturated_and_shift_invariant() {
    let mut rows = Vec::new();
    for id in 0..10 {
        let arm = if id < 5 { Arm::Rl } else { Arm::Control };
        let lift = if arm == Arm::Rl { 300 } else { 100 };
        rows.push((arm, series(id, &constant(4_000 + 100 * id), &constant(4_000 + 100 * id + lift))));
    }
    let r = did_regression(&panel_of(rows.clone()), Arm::Rl, Arm::Control, Period::Month1).unwrap();
    assert!((r.b - 200.0).abs() < 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noisy: Vec<_> = (0..40)
        .map(|id| {
            let arm = if id % 2 == 0 { Arm::Rl } else { Arm::Control };
            let b: Vec<u32> = (0..30).map(|_| rng.random_range(3_000..7_000)).collect();
            let s: Vec<u32> = (0..30).map(|_| rng.random_range(3_000..7_500)).collect();
            (arm, b, s)
        })
        .collect();
    let build = |shift: u32| {
        panel_of(
            noisy
                .iter()
                .enumerate()
                .map(|(id, (arm, b, s))| {
                    let b: Vec<u32> = b.iter().map(|v| v + shift).collect();
                    let s: Vec<u32> = s.iter().map(|v| v + shift).collect();
                    (*arm, series(id as u32, &b, &s))
                })
                .collect(),
        )
    };
    let a = did_regression(&build(0), Arm::Rl, Arm::Control, Period::Month1).unwrap();
    let b = did_regression(&build(1_000), Arm::Rl, Arm::Control, Period::Month1).unwrap();
    assert!((a.b - b.b).abs() < 1e-9 && (a.se - b.se).abs() < 1e-9);
    assert!(a.se > 0.0 && (0.0..=1.0).contains(&a.p));

    // HC1 against the textbook sandwich on the change-score regression.
    let change: Vec<(f64, f64)> = noisy
        .iter()
        .map(|(arm, b, s)| {
            let m = |v: &[u32]| v.iter().map(|x| f64::from(*x)).sum::<f64>() / v.len() as f64;
            (if *arm == Arm::Rl { 1.0 } else { 0.0 }, m(s) - m(b))
        })
        .collect();
    let x: Vec<Vec<f64>> = change.iter().map(|(d, _)| vec![1.0, *d]).collect();
    let y: Vec<f64> = change.iter().map(|(_, c)| *c).collect();
    let ols = ols_fit(&x, &y).unwrap();
    assert!((ols.beta[1] - a.b).abs() < 1e-9);
    assert!((ols.cov_hc1[1][1].sqrt() - a.se).abs() < 1e-9 * a.se);
}

#[test]
fn did_needs_two_per_arm() {
    let panel = panel_of(vec![
        (Arm::Rl, series(0, &constant(5_000), &constant(5_000))),
        (Arm::Control, series(1, &constant(5_000), &constant(5_000))),
        (Arm::Control, series(2, &constant(5_000), &constant(5_000))),
    ]);
    assert!(matches!(did_regression(&panel, Arm::Rl, Arm::Control, Period::Month1), Err(StatsError::DegenerateDesign(_))));
    let control_only = panel_of(vec![(Arm::Control, series(0, &constant(5_000), &constant(5_000)))]);
    assert!(matches!(table4(&control_only), Err(StatsError::DegenerateDesign(_))));
    assert!(matches!(table6_design(&control_only), Err(StatsError::DegenerateDesign(_))));
}

#[test]
fn gee_single_observation_clusters_are_ols_with_hc0() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let clusters: Vec<GeeCluster> = (0..300)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..10.0);
            let e = rng.random_range(-1.0..1.0) * (1.0 + x);
            GeeCluster { x: vec![1.0, x], y: vec![2.0 + 0.5 * x + e] }
        })
        .collect();
    let data = GeeData { names: vec!["(Intercept)".into(), "x".into()], clusters };
    let g = gee_fit(&data, &GeeOptions::default()).unwrap();
    let x: Vec<Vec<f64>> = data.clusters.iter().map(|c| c.x.clone()).collect();
    let y: Vec<f64> = data.clusters.iter().map(|c| c.y[0]).collect();
    let o = ols_fit(&x, &y).unwrap();
    for k in 0..2 {
        assert!((g.estimates[k] - o.beta[k]).abs() < 1e-8);
        assert!((g.se[k] - o.cov_hc0[k][k].sqrt()).abs() < 1e-8 * g.se[k]);
        assert!((g.ci_low[k] - (g.estimates[k] - 1.96 * g.se[k])).abs() < 1e-9);
    }
}

#[test]
fn gee_design_matches_table_layout() {
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for id in 0..40u32 {
        let arm = Arm::ALL[id as usize % 4];
        let s: Vec<u32> = (0..30).map(|_| rng.random_range(2_000..9_000)).collect();
        rows.push((arm, series(id, &constant(5_000), &s)));
    }
    let panel = panel_of(rows);
    let d = table6_design(&panel).unwrap();
    assert_eq!(d.names, pearl::stats::TABLE6_COVARIATES.to_vec());
    assert_eq!(d.clusters.len(), 40);
    assert_eq!(d.n_obs(), 40 * 30);
    let g = gee_fit(&d, &GeeOptions::default()).unwrap();
    assert!(g.rho > -1.0 / 29.0 && g.rho < 1.0);
    assert!(g.se.iter().all(|s| *s > 0.0));
    let sd = sample_sd(&d.clusters.iter().flat_map(|c| c.y.iter().copied()).collect::<Vec<_>>());
    assert!(g.scale.sqrt() < 1.1 * sd);
}
