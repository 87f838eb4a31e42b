//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lerrw::analytic::{k_constant, mean_s};
use lerrw::environment::Environment;
use lerrw::harness::{
    environment_seed, run_hitting_experiment, run_limsup_experiment, run_moment_experiment,
    run_slln_experiment, ExperimentConfig, ExperimentKind, ExperimentRecord, Summary,
};
use lerrw::oracle::{equivalence_distance, martingale_check, Arithmetic};
use lerrw::simulator::{quenched_hit_with, walk_stream, DEFAULT_HIT_BUDGET};
use lerrw::special::{check_inequalities, digamma, log_grid};
use lerrw::WalkConfig;

use common::hitting_time_linear_solve;

fn cfg(alpha: f64, delta: f64) -> WalkConfig {
    WalkConfig::new(alpha, delta).unwrap()
}

fn oracle_grid() -> Vec<WalkConfig> {
    let mut g = Vec::new();
    for a in [0.0, 1.0, -1.0, 2.0] {
        for d in [0.5, 1.0, 2.0] {
            g.push(cfg(a, d));
        }
    }
    g
}

fn criterion_1() -> (bool, String) {
    let (mut float_tv, mut exact_tv) = (0.0f64, 0.0f64);
    for c in oracle_grid() {
        for n in 1..=10 {
            float_tv = float_tv.max(equivalence_distance(&c, n, Arithmetic::Float).unwrap().distance);
            exact_tv = exact_tv.max(equivalence_distance(&c, n, Arithmetic::Exact).unwrap().distance);
        }
    }
    (
        float_tv <= 1e-10 && exact_tv == 0.0,
        format!("max TV distance: float {float_tv:.3e} (<= 1e-10), rational {exact_tv:e} (== 0)"),
    )
}

fn criterion_2() -> (bool, String) {
    let (mut dev_f, mut dev_e) = (0.0f64, 0.0f64);
    let (mut below, mut all_edges) = (0.0f64, 0.0f64);
    for c in oracle_grid() {
        let f = martingale_check(&c, 10, Arithmetic::Float).unwrap();
        let e = martingale_check(&c, 10, Arithmetic::Exact).unwrap();
        dev_f = dev_f.max(f.max_deviation);
        dev_e = dev_e.max(e.max_deviation);
        below = below.max(e.max_vertex_sum_deviation);
        all_edges = all_edges.max(e.max_full_sum_deviation);
    }
    let martingale = dev_f <= 1e-12 && dev_e == 0.0;
    let decomposition = below == 0.0;
    (
        martingale && decomposition,
        format!(
            "martingale deviation float {dev_f:.3e}, rational {dev_e:e} ({}); \
             decomposition over x < X_m: max deviation {below:.4} ({}); \
             over all edges: {all_edges:e}",
            if martingale { "ok" } else { "violated" },
            if decomposition { "ok" } else { "violated" },
        ),
    )
}

fn criterion_3() -> (bool, String) {
    let k = (k_constant(0.0, 1.0).unwrap() - 1.0 / 4f64.ln()).abs();
    let g = (digamma(1.0).unwrap() - digamma(0.5).unwrap() - 4f64.ln()).abs();
    let checks = check_inequalities(&log_grid(1e-4, 1e4, 4001)).unwrap();
    let points: usize = checks.iter().map(|c| c.points).sum();
    let violations: usize = checks.iter().map(|c| c.violations).sum();
    (
        k <= 1e-12 && g <= 1e-12 && violations == 0,
        format!(
            "|K(0,1) - 1/ln 4| = {k:.1e}, |digamma gap - ln 4| = {g:.1e}, \
             {} inequality families, {violations} violations in {points} point checks",
            checks.len()
        ),
    )
}

fn criterion_4() -> (bool, String) {
    let cases = [(1.0, 1.0, 50), (0.0, 1.0, 20), (0.5, 2.0, 100)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, d, x) in cases {
        let e = ExperimentConfig {
            kind: ExperimentKind::Moments,
            configs: vec![cfg(a, d)],
            seeds: 100_000,
            horizon: x,
            master_seed: 4,
            ..Default::default()
        };
        let out = run_moment_experiment(&e).unwrap();
        let Summary::Moments(m) = &out.summaries[0] else { unreachable!() };
        ok &= m.mean_z.abs() <= 4.0 && m.variance_z.abs() <= 4.0;
        parts.push(format!(
            "({a},{d},x={x}) z_mean {:+.2} z_var {:+.2}",
            m.mean_z, m.variance_z
        ));
    }
    let ln4 = (mean_s(&cfg(1.0, 1.0), 50).unwrap() - 4f64.ln()).abs();
    ok &= ln4 <= 1e-12;
    parts.push(format!("|E[S_50] - ln 4| = {ln4:.1e} at alpha = delta = 1"));
    (ok, parts.join("; "))
}

fn criterion_5() -> (bool, String) {
    let configs = [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (1.0, 3.0), (0.25, 0.5)];
    let mut worst_rel = 0.0f64;
    let mut sandwich_violations = 0usize;
    let mut non_finite = 0usize;
    for k in 0..20u64 {
        let (a, d) = configs[k as usize % configs.len()];
        let mut env = Environment::sampled(cfg(a, d), environment_seed(11, k)).unwrap();
        let p: Vec<f64> = (0..=200).map(|i| env.p(i)).collect();
        for x in 1..=200u64 {
            let t = env.expected_hitting_time(x);
            let solved = hitting_time_linear_solve(&p, x as usize);
            if !(t.is_finite() && solved.is_finite()) {
                non_finite += 1;
                continue;
            }
            worst_rel = worst_rel.max((t - solved).abs() / solved);
            let b = env.hitting_bounds(x, 10_000).unwrap();
            if !b.brackets(env.log_expected_hitting_time(x), 1e-12) {
                sandwich_violations += 1;
            }
        }
    }

    let unit = Environment::unit();
    let mut rng = walk_stream(5);
    let mut unit_z = Vec::new();
    for (x, exact) in [(2u64, 4.0), (3, 9.0)] {
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let t = quenched_hit_with(&unit, x, DEFAULT_HIT_BUDGET, &mut rng).unwrap() as f64;
            s += t;
            s2 += t * t;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        unit_z.push((mean - exact) / se);
    }

    let e = ExperimentConfig {
        kind: ExperimentKind::Hitting,
        configs: vec![cfg(0.0, 1.0)],
        seeds: 20,
        horizon: 10,
        replicas: 10_000,
        step_budget: 200_000_000,
        master_seed: 5,
        ..Default::default()
    };
    let out = run_hitting_experiment(&e).unwrap();
    let mut sampled_z = Vec::new();
    let mut skipped = 0;
    for s in &out.summaries {
        let Summary::Hitting(h) = s else { unreachable!() };
        match h.z {
            Some(z) => sampled_z.push(z),
            None => skipped += 1,
        }
        if !h.bounds_hold {
            sandwich_violations += 1;
        }
    }
    let max_abs = |v: &[f64]| v.iter().map(|z| z.abs()).fold(0.0, f64::max);
    let ok = worst_rel <= 1e-9
        && non_finite == 0
        && sandwich_violations == 0
        && max_abs(&unit_z) <= 3.0
        && !sampled_z.is_empty()
        && max_abs(&sampled_z) <= 3.0;
    (
        ok,
        format!(
            "T(x) vs linear solve: max rel err {worst_rel:.2e} over 20 envs, x <= 200 \
             ({non_finite} non-finite); sandwich violations {sandwich_violations}; \
             unit env |z| {:.2}, {:.2}; sampled (0,1) x=10: {} envs simulated, \
             {skipped} over budget, max |z| {:.2}",
            unit_z[0].abs(),
            unit_z[1].abs(),
            sampled_z.len(),
            max_abs(&sampled_z)
        ),
    )
}

fn criterion_6() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    let groups: [(&[(f64, f64)], u64, f64); 2] = [
        (&[(-1.0, 1.0), (0.0, 1.0), (0.5, 1.0), (0.5, 2.0)], 100_000, 0.05),
        (&[(1.0, 3.0), (1.0, 4.0)], 1_000_000, 0.10),
    ];
    for (configs, x, tol) in groups {
        for &(a, d) in configs {
            let e = ExperimentConfig {
                kind: ExperimentKind::Slln,
                configs: vec![cfg(a, d)],
                seeds: 10,
                horizon: x,
                checkpoints: Some(vec![x]),
                master_seed: 6,
                ..Default::default()
            };
            let out = run_slln_experiment(&e).unwrap();
            let Summary::Slln(s) = &out.summaries[0] else { unreachable!() };
            let within = if tol == 0.05 { s.within_5_percent } else { s.within_10_percent };
            ok &= within >= 9;
            parts.push(format!(
                "({a},{d}) {within}/10 within {:.0}% of {:.4} (mean ratio {:.4})",
                tol * 100.0,
                s.target,
                s.mean_ratio
            ));
        }
    }
    (ok, parts.join("; "))
}

/// Standard error of the pooled slope, from the spread of per-walk slopes.
fn per_seed_slope_se(records: &[ExperimentRecord], n_max: u64) -> f64 {
    let mut by_seed: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| 10 * r.checkpoint >= n_max) {
        by_seed
            .entry(r.seed)
            .or_default()
            .push(((r.checkpoint as f64).ln(), r.value.ln()));
    }
    let slopes: Vec<f64> = by_seed
        .values()
        .map(|pts| {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        })
        .collect();
    let n = slopes.len() as f64;
    let m = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn criterion_7() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    let e = ExperimentConfig {
        kind: ExperimentKind::Limsup,
        configs: vec![cfg(0.0, 1.0)],
        seeds: 30,
        horizon: 1_000_000,
        master_seed: 7,
        ..Default::default()
    };
    let out = run_limsup_experiment(&e).unwrap();
    let Summary::Limsup(s) = &out.summaries[0] else { unreachable!() };
    let in_bracket = (0.5..=2.0).contains(&s.max_ratio_final);
    ok &= in_bracket;
    parts.push(format!(
        "(0,1) n=1e6, 30 walks: max ratio {:.3} in [0.5, 2.0] {} (mean {:.3})",
        s.max_ratio_final,
        if in_bracket { "yes" } else { "no" },
        s.mean_ratio_final
    ));
    let fits = [
        ((1.0, 4.0), 0.15, 0.35),
        ((1.0, 1.0), 0.4, 0.6),
        ((0.0, 0.0), 0.4, 0.6),
        ((-2.0, 0.0), 0.25, 0.42),
    ];
    for ((a, d), lo, hi) in fits {
        let e = ExperimentConfig {
            kind: ExperimentKind::Limsup,
            configs: vec![cfg(a, d)],
            seeds: 100,
            horizon: 10_000_000,
            master_seed: 7,
            ..Default::default()
        };
        let out = run_limsup_experiment(&e).unwrap();
        let Summary::Limsup(s) = &out.summaries[0] else { unreachable!() };
        let slope = s.fitted_exponent.unwrap_or(f64::NAN);
        let inside = (lo..=hi).contains(&slope);
        ok &= inside;
        parts.push(format!(
            "({a},{d}) exponent {slope:.3} +- {:.3} in [{lo}, {hi}] {}",
            per_seed_slope_se(&out.records, s.n_max),
            if inside { "yes" } else { "no" }
        ));
    }
    (ok, parts.join("; "))
}

fn run_cli(dir: &Path, kind: &str, config: &Path, workers: usize) -> Vec<u8> {
    let out = dir.join(format!("{kind}-{workers}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_lerrw"))
        .args(["experiment", kind, "--config"])
        .arg(config)
        .args(["--workers", &workers.to_string(), "--out"])
        .arg(&out)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("run lerrw");
    assert!(status.success(), "lerrw experiment {kind} failed");
    std::fs::read(out).unwrap()
}

fn criterion_8() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("limsup", r#"{"configs": [{"alpha": 0, "delta": 1}, {"alpha": 1, "delta": 4}],
                        "seeds": 16, "horizon": 100000, "master_seed": 8}"#),
        ("slln", r#"{"configs": [{"alpha": 0.5, "delta": 1}], "seeds": 16,
                      "horizon": 10000, "master_seed": 8}"#),
        ("moments", r#"{"configs": [{"alpha": 0, "delta": 1}], "seeds": 2000,
                         "horizon": 20, "master_seed": 8}"#),
        ("hitting", r#"{"configs": [{"alpha": 0.5, "delta": 1}], "seeds": 8, "horizon": 5,
                         "replicas": 500, "master_seed": 8}"#),
    ];
    let mut identical = true;
    let mut parts = Vec::new();
    for (kind, json) in configs {
        let path = dir.path().join(format!("{kind}.json"));
        std::fs::write(&path, json).unwrap();
        let reference = run_cli(dir.path(), kind, &path, 1);
        let same = [4, 16]
            .iter()
            .all(|&w| run_cli(dir.path(), kind, &path, w) == reference)
            && run_cli(dir.path(), kind, &path, 1) == reference;
        identical &= same && !reference.is_empty();
        parts.push(format!(
            "{kind} {} bytes {}",
            reference.len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    (identical, format!("workers 1, 4, 16 and a repeat: {}", parts.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> (bool, String)); 8] = [
        (1, "representation equivalence", 60, criterion_1),
        (2, "martingale certification", 60, criterion_2),
        (3, "constants and inequality grids", 10, criterion_3),
        (4, "moments of S_x", 300, criterion_4),
        (5, "hitting times", 300, criterion_5),
        (6, "strong law for S_x", 120, criterion_6),
        (7, "scaling laws", 1800, criterion_7),
        (8, "determinism across workers", 300, criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (n, title, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| n.to_string() == *f) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = run();
        let elapsed = start.elapsed();
        let on_time = elapsed <= Duration::from_secs(budget);
        let passed = ok && on_time;
        println!(
            "criterion {n}: {} {title}: {detail} [{:.1} s of {budget} s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if !passed {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
