use std::collections::HashMap;

use lerrw::environment::Environment;
use lerrw::harness::{environment_seed, run_limsup_experiment, ExperimentConfig, ExperimentKind, Summary};
use lerrw::oracle::{enumerate_lerrw, Arithmetic, Path};
use lerrw::simulator::{lerrw_run, quenched_step, walk_stream, CheckpointSchedule, Move, RunOptions, WalkState};
use lerrw::WalkConfig;

fn cfg(alpha: f64, delta: f64) -> WalkConfig {
    WalkConfig::new(alpha, delta).unwrap()
}

/// Every path of the enumeration must be hit with a frequency within four
/// binomial standard errors of its probability.
fn assert_matches_enumeration(c: &WalkConfig, n: usize, counts: &HashMap<Path, f64>, samples: f64) {
    let law = enumerate_lerrw(c, n, Arithmetic::Float).unwrap();
    let seen: f64 = counts.values().sum();
    assert_eq!(seen, samples);
    for e in law.entries() {
        let freq = counts.get(&e.path).copied().unwrap_or(0.0) / samples;
        let se = (e.probability * (1.0 - e.probability) / samples).sqrt();
        assert!(
            (freq - e.probability).abs() <= 4.0 * se + 1e-12,
            "{c:?} path {}: {freq} vs {}",
            e.path,
            e.probability
        );
    }
}

#[test]
fn reinforced_walk_reproduces_path_law() {
    let samples = 1_000_000u64;
    for (c, n) in [(cfg(0.0, 1.0), 6), (cfg(1.0, 0.5), 5), (cfg(-1.0, 2.0), 4)] {
        let mut rng = walk_stream(17);
        let mut counts: HashMap<Path, f64> = HashMap::new();
        let mut moves = Vec::with_capacity(n);
        for _ in 0..samples {
            let mut state = WalkState::new(c);
            moves.clear();
            for _ in 0..n {
                moves.push(state.step(&mut rng));
            }
            *counts.entry(Path::from_moves(&moves).unwrap()).or_default() += 1.0;
        }
        assert_matches_enumeration(&c, n, &counts, samples as f64);
    }
}

#[test]
fn averaged_quenched_walks_reproduce_path_law() {
    let c = cfg(0.0, 1.0);
    let n = 6;
    let (envs, walks) = (1000u64, 1000u64);
    let mut rng = walk_stream(23);
    // Per-path sums of the per-environment frequency and of its square.
    let mut sums: HashMap<Path, (f64, f64)> = HashMap::new();
    let mut moves = Vec::with_capacity(n);
    for k in 0..envs {
        let env = Environment::sampled(c, environment_seed(23, k)).unwrap();
        let mut local: HashMap<Path, f64> = HashMap::new();
        for _ in 0..walks {
            moves.clear();
            let mut pos = 0u64;
            for _ in 0..n {
                let mv = quenched_step(&env, pos, &mut rng);
                pos = if mv == Move::Up { pos + 1 } else { pos - 1 };
                moves.push(mv);
            }
            *local.entry(Path::from_moves(&moves).unwrap()).or_default() += 1.0;
        }
        for (path, count) in local {
            let f = count / walks as f64;
            let e = sums.entry(path).or_default();
            e.0 += f;
            e.1 += f * f;
        }
    }
    let law = enumerate_lerrw(&c, n, Arithmetic::Float).unwrap();
    let m = envs as f64;
    for e in law.entries() {
        let (s, s2) = sums.get(&e.path).copied().unwrap_or_default();
        let mean = s / m;
        let se = ((s2 / m - mean * mean) / (m - 1.0)).sqrt();
        assert!(
            (mean - e.probability).abs() <= 4.0 * se.max(1e-6),
            "path {}: {mean} vs {}",
            e.path,
            e.probability
        );
    }
}

#[test]
fn runs_are_reproducible_and_checkpoints_consistent() {
    let c = cfg(0.5, 1.0);
    let schedule = CheckpointSchedule::default_for(10_000);
    let opts = RunOptions { record_returns: true, record_occupation: true };
    let a = lerrw_run(c, 5, 10_000, &schedule, opts).unwrap();
    let b = lerrw_run(c, 5, 10_000, &schedule, opts).unwrap();
    assert_eq!(a, b);
    let last = a.final_checkpoint().unwrap();
    assert_eq!(last.n, 10_000);
    let occ = a.occupation.as_ref().unwrap();
    assert_eq!(occ.iter().sum::<u64>(), 10_000);
    for w in a.checkpoints.windows(2) {
        assert!(w[0].max_position <= w[1].max_position);
        assert!(w[1].position <= w[1].max_position);
    }
    assert!(a.return_times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn recurrent_case_spreads_logarithmically() {
    let e = ExperimentConfig {
        kind: ExperimentKind::Limsup,
        configs: vec![cfg(0.0, 1.0)],
        seeds: 30,
        horizon: 1_000_000,
        master_seed: 31,
        ..Default::default()
    };
    let out = run_limsup_experiment(&e).unwrap();
    let Summary::Limsup(s) = &out.summaries[0] else { unreachable!() };
    assert!((0.5..=2.0).contains(&s.mean_ratio_final), "{s:?}");
}
