use serde::{Deserialize, Serialize};

use super::{parallel_map, ExperimentConfig, ExperimentKind, ExperimentOutput, ExperimentRecord, Summary};
use crate::analytic::{moments, predict_scaling, slln_normalizer, slln_target, ScalingLaw};
use crate::environment::{sample_site, Environment};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::scheme::{Recurrence, WalkConfig};
use crate::simulator::{lerrw_run, quenched_hit_with, walk_stream, CheckpointSchedule, RunOptions};

/// Cutoff for the partial sum of `π` in the positive-recurrent hitting bound.
pub const HITTING_Z_CUTOFF: u64 = 10_000;

/// Fewest walks per environment for which a hitting-time mean is reported.
pub const MIN_HITTING_REPLICAS: u64 = 100;

/// Seed of the `k`-th walk of an experiment.
pub fn replica_seed(master_seed: u64, k: u64) -> u64 {
    rng::derive_seed(master_seed, Purpose::Replica, k)
}

/// Seed of the `k`-th environment of an experiment.
pub fn environment_seed(master_seed: u64, k: u64) -> u64 {
    rng::derive_seed(master_seed, Purpose::Environment, k)
}

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::InvalidConfig(msg))
}

fn explicit_or_horizon(ecfg: &ExperimentConfig) -> Vec<u64> {
    match &ecfg.checkpoints {
        Some(_) => ecfg.checkpoint_list(),
        None => vec![ecfg.horizon],
    }
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimsupSummary {
    pub alpha: f64,
    pub delta: f64,
    pub law: ScalingLaw,
    pub seeds: u64,
    pub n_max: u64,
    /// Normalized running maximum of each walk at `n_max`.
    pub final_ratios: Vec<f64>,
    pub max_ratio_final: f64,
    pub mean_ratio_final: f64,
    /// Largest ratio over all walks and checkpoints in `[n_max/10, n_max]`.
    pub max_ratio_last_decade: f64,
    /// Slope of `ln max` against `ln n` over `[n_max/10, n_max]`, all walks pooled.
    pub fitted_exponent: Option<f64>,
    pub fit_points: usize,
}

pub fn run_limsup_experiment(ecfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ecfg.validate()?;
    let cps = ecfg.checkpoint_list();
    let Some(&n_max) = cps.last() else {
        return invalid("no checkpoint lies within the horizon".into());
    };
    let schedule = CheckpointSchedule::explicit(cps)?;
    let seeds: Vec<u64> = (0..ecfg.seeds).map(|k| replica_seed(ecfg.master_seed, k)).collect();
    let mut out = ExperimentOutput {
        records: Vec::new(),
        summaries: Vec::new(),
    };
    for cfg in &ecfg.configs {
        if cfg.classify(0).verdict == Recurrence::Transient {
            return invalid(format!(
                "alpha = {} > 1 is transient: the running maximum grows linearly and has no limsup law",
                cfg.alpha()
            ));
        }
        let law = predict_scaling(cfg)?;
        let runs = parallel_map(ecfg.workers, &seeds, |&s| {
            lerrw_run(*cfg, s, ecfg.horizon, &schedule, RunOptions::default())
        })?;
        let mut final_ratios = Vec::with_capacity(runs.len());
        let mut max_decade = f64::NEG_INFINITY;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (&seed, traj) in seeds.iter().zip(&runs) {
            for cp in &traj.checkpoints {
                let norm = law.normalizer(cp.n);
                if !(norm > 0.0 && norm.is_finite()) {
                    continue;
                }
                let rec = ExperimentRecord::new(
                    ExperimentKind::Limsup,
                    cfg,
                    seed,
                    cp.n,
                    "max_position",
                    cp.max_position as f64,
                    norm,
                );
                if 10 * cp.n >= n_max {
                    max_decade = max_decade.max(rec.ratio);
                    xs.push((cp.n as f64).ln());
                    ys.push((cp.max_position as f64).ln());
                }
                if cp.n == n_max {
                    final_ratios.push(rec.ratio);
                }
                out.records.push(rec);
            }
        }
        let fitted_exponent = slope(&xs, &ys);
        out.summaries.push(Summary::Limsup(LimsupSummary {
            alpha: cfg.alpha(),
            delta: cfg.delta(),
            law,
            seeds: ecfg.seeds,
            n_max,
            max_ratio_final: final_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_ratio_final: final_ratios.iter().sum::<f64>() / final_ratios.len().max(1) as f64,
            final_ratios,
            max_ratio_last_decade: max_decade,
            fitted_exponent,
            fit_points: xs.len(),
        }));
    }
    Ok(out)
}

/// `S_x` of the environment `env_seed` at every checkpoint, drawing sites
/// one at a time without materializing the environment.
pub fn log_resistance_path(cfg: &WalkConfig, env_seed: u64, checkpoints: &[u64]) -> Result<Vec<f64>> {
    let key = rng::key(env_seed);
    let mut values = Vec::with_capacity(checkpoints.len());
    let mut s = 0.0;
    let mut i = 0u64;
    for &x in checkpoints {
        while i < x {
            i += 1;
            s += sample_site(cfg, key, i)?.zeta;
        }
        values.push(s);
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnSummary {
    pub alpha: f64,
    pub delta: f64,
    pub x: u64,
    pub target: f64,
    pub seeds: u64,
    /// `S_x / x^{1−α}` (or `S_x / ln x`) for each environment at the last checkpoint.
    pub final_ratios: Vec<f64>,
    pub mean_ratio: f64,
    pub within_5_percent: usize,
    pub within_10_percent: usize,
}

fn require_beta_environment(cfg: &WalkConfig) -> Result<()> {
    if !(cfg.delta() > 0.0) {
        return invalid("this experiment needs delta > 0 (a Beta environment)".into());
    }
    if cfg.alpha() > 1.0 {
        return invalid(format!("alpha = {} > 1 is outside the recurrent regime", cfg.alpha()));
    }
    Ok(())
}

pub fn run_slln_experiment(ecfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ecfg.validate()?;
    let cps = ecfg.checkpoint_list();
    let Some(&x_max) = cps.last() else {
        return invalid("no checkpoint lies within the horizon".into());
    };
    let seeds: Vec<u64> = (0..ecfg.seeds).map(|k| environment_seed(ecfg.master_seed, k)).collect();
    let mut out = ExperimentOutput {
        records: Vec::new(),
        summaries: Vec::new(),
    };
    for cfg in &ecfg.configs {
        require_beta_environment(cfg)?;
        let target = slln_target(cfg)?;
        let paths = parallel_map(ecfg.workers, &seeds, |&s| log_resistance_path(cfg, s, &cps))?;
        let mut final_ratios = Vec::new();
        for (&seed, values) in seeds.iter().zip(&paths) {
            for (&x, &s) in cps.iter().zip(values) {
                let norm = slln_normalizer(cfg, x);
                if !(norm > 0.0) {
                    continue;
                }
                let rec = ExperimentRecord::new(ExperimentKind::Slln, cfg, seed, x, "S_x", s, norm);
                if x == x_max {
                    final_ratios.push(rec.ratio);
                }
                out.records.push(rec);
            }
        }
        let within = |tol: f64| {
            final_ratios
                .iter()
                .filter(|r| ((*r - target) / target).abs() <= tol)
                .count()
        };
        out.summaries.push(Summary::Slln(SllnSummary {
            alpha: cfg.alpha(),
            delta: cfg.delta(),
            x: x_max,
            target,
            seeds: ecfg.seeds,
            mean_ratio: final_ratios.iter().sum::<f64>() / final_ratios.len().max(1) as f64,
            within_5_percent: within(0.05),
            within_10_percent: within(0.10),
            final_ratios,
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub alpha: f64,
    pub delta: f64,
    pub x: u64,
    pub environments: u64,
    pub mc_mean: f64,
    pub mean_se: f64,
    pub analytic_mean: f64,
    pub mean_z: f64,
    pub mc_variance: f64,
    pub variance_se: f64,
    pub analytic_variance: f64,
    pub variance_z: f64,
    /// Either moment is more than four standard errors from its target.
    pub flagged: bool,
}

/// Sample mean and unbiased variance with their standard errors.
///
/// The variance error uses `(m4 − m2² (n−3)/(n−1)) / n` with central
/// sample moments `m2`, `m4`.
pub fn moment_estimates(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in values {
        let d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    let var = m2 * n / (n - 1.0);
    let mean_se = (var / n).sqrt();
    let var_se = ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    (mean, mean_se, var, var_se)
}

pub fn run_moment_experiment(ecfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ecfg.validate()?;
    if ecfg.seeds < 2 {
        return invalid("moment experiments need at least two environments".into());
    }
    let xs = explicit_or_horizon(ecfg);
    let seeds: Vec<u64> = (0..ecfg.seeds).map(|k| environment_seed(ecfg.master_seed, k)).collect();
    let mut out = ExperimentOutput {
        records: Vec::new(),
        summaries: Vec::new(),
    };
    for cfg in &ecfg.configs {
        require_beta_environment(cfg)?;
        let paths = parallel_map(ecfg.workers, &seeds, |&s| log_resistance_path(cfg, s, &xs))?;
        for (j, &x) in xs.iter().enumerate() {
            let values: Vec<f64> = paths.iter().map(|p| p[j]).collect();
            let (mc_mean, mean_se, mc_var, var_se) = moment_estimates(&values);
            let exact = moments(cfg, x)?;
            let mean_norm = if exact.mean != 0.0 { exact.mean.abs() } else { 1.0 };
            out.records.push(ExperimentRecord::new(
                ExperimentKind::Moments,
                cfg,
                ecfg.master_seed,
                x,
                "mean_S",
                mc_mean,
                mean_norm,
            ));
            out.records.push(ExperimentRecord::new(
                ExperimentKind::Moments,
                cfg,
                ecfg.master_seed,
                x,
                "var_S",
                mc_var,
                exact.variance,
            ));
            let mean_z = (mc_mean - exact.mean) / mean_se;
            let variance_z = (mc_var - exact.variance) / var_se;
            out.summaries.push(Summary::Moments(MomentSummary {
                alpha: cfg.alpha(),
                delta: cfg.delta(),
                x,
                environments: ecfg.seeds,
                mc_mean,
                mean_se,
                analytic_mean: exact.mean,
                mean_z,
                mc_variance: mc_var,
                variance_se: var_se,
                analytic_variance: exact.variance,
                variance_z,
                flagged: !(mean_z.abs() <= 4.0 && variance_z.abs() <= 4.0),
            }));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingSummary {
    pub alpha: f64,
    pub delta: f64,
    pub environment_seed: u64,
    pub x: u64,
    /// `T(x)` of the environment.
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
    pub upper_posrec: Option<f64>,
    pub bounds_hold: bool,
    /// Walks simulated; 0 when `T(x)` is too large for the step budget.
    pub replicas: u64,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    pub z: Option<f64>,
    /// Walks stopped by the step budget before reaching `x`.
    pub overflows: u64,
}

/// Slack, in log units, allowed when comparing `T(x)` with its bounds.
const BOUND_SLACK: f64 = 1e-12;

fn hitting_one(
    ecfg: &ExperimentConfig,
    cfg: &WalkConfig,
    k: u64,
    xs: &[u64],
) -> Result<(Vec<ExperimentRecord>, Vec<HittingSummary>)> {
    let env_seed = environment_seed(ecfg.master_seed, k);
    let mut env = Environment::sampled(*cfg, env_seed)?;
    let mut rng = walk_stream(replica_seed(ecfg.master_seed, k));
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &x in xs {
        let t = env.expected_hitting_time(x);
        let b = env.hitting_bounds(x, HITTING_Z_CUTOFF.max(x))?;
        let bounds_hold = b.brackets(env.log_expected_hitting_time(x), BOUND_SLACK);
        let affordable = if t.is_finite() {
            (ecfg.step_budget as f64 / t).floor() as u64
        } else {
            0
        };
        let planned = ecfg.replicas.min(affordable);
        let (mut replicas, mut overflows) = (0u64, 0u64);
        let (mut sum, mut sum2) = (0.0f64, 0.0f64);
        let mut remaining = ecfg.step_budget;
        if planned >= MIN_HITTING_REPLICAS.min(ecfg.replicas) {
            for _ in 0..planned {
                match quenched_hit_with(&env, x, remaining, &mut rng) {
                    Ok(tau) => {
                        remaining -= tau;
                        replicas += 1;
                        let tau = tau as f64;
                        sum += tau;
                        sum2 += tau * tau;
                    }
                    Err(Error::BudgetExceeded { .. }) => {
                        overflows += 1;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        let (mc_mean, mc_se, z) = if replicas >= 2 {
            let n = replicas as f64;
            let mean = sum / n;
            let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
            let se = (var / n).sqrt();
            let z = (overflows == 0).then(|| (mean - t) / se);
            (Some(mean), Some(se), z)
        } else {
            (None, None, None)
        };
        if t > 0.0 && t.is_finite() {
            let rec = |stat: &str, v: f64| {
                ExperimentRecord::new(ExperimentKind::Hitting, cfg, env_seed, x, stat, v, t)
            };
            if let Some(m) = mc_mean {
                records.push(rec("mean_tau", m));
            }
            records.push(rec("lower_bound", b.lower()));
            records.push(rec("upper_bound", b.upper()));
            if let Some(u) = b.upper_posrec() {
                records.push(rec("upper_bound_posrec", u));
            }
        }
        summaries.push(HittingSummary {
            alpha: cfg.alpha(),
            delta: cfg.delta(),
            environment_seed: env_seed,
            x,
            expected: t,
            lower: b.lower(),
            upper: b.upper(),
            upper_posrec: b.upper_posrec(),
            bounds_hold,
            replicas,
            mc_mean,
            mc_se,
            z,
            overflows,
        });
    }
    Ok((records, summaries))
}

pub fn run_hitting_experiment(ecfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ecfg.validate()?;
    let xs = explicit_or_horizon(ecfg);
    let ks: Vec<u64> = (0..ecfg.seeds).collect();
    let mut out = ExperimentOutput {
        records: Vec::new(),
        summaries: Vec::new(),
    };
    for cfg in &ecfg.configs {
        require_beta_environment(cfg)?;
        let per_env = parallel_map(ecfg.workers, &ks, |&k| hitting_one(ecfg, cfg, k, &xs))?;
        for (records, summaries) in per_env {
            out.records.extend(records);
            out.summaries.extend(summaries.into_iter().map(Summary::Hitting));
        }
    }
    Ok(out)
}
