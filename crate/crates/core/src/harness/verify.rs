use serde::{Deserialize, Serialize};

use crate::analytic::{k_constant, mean_s, mean_s_telescoped};
use crate::environment::Environment;
use crate::error::Result;
use crate::oracle::{
    enumerate_lerrw, equivalence_distance, martingale_check, s_inf_lower_bound, s_values,
    Arithmetic, MartingaleReport,
};
use crate::scheme::WalkConfig;
use crate::special::{check_inequalities, digamma, log_grid};

use super::experiments::environment_seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Smaller trees and grids.
    Quick,
    #[default]
    Standard,
}

struct Sizes {
    max_steps: usize,
    grid_points: usize,
    s_sites: u64,
    s_terms: u64,
    environments: u64,
    hitting_x: u64,
}

impl Profile {
    fn sizes(self) -> Sizes {
        match self {
            Profile::Quick => Sizes {
                max_steps: 8,
                grid_points: 401,
                s_sites: 20,
                s_terms: 200_000,
                environments: 5,
                hitting_x: 50,
            },
            Profile::Standard => Sizes {
                max_steps: 10,
                grid_points: 2001,
                s_sites: 100,
                s_terms: 200_000,
                environments: 20,
                hitting_x: 200,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    /// `tolerance − measured`, or the smallest slack of an inequality family.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            margin: tolerance - measured,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub profile: Profile,
    pub passed: bool,
    pub failed: Vec<String>,
    pub checks: Vec<Check>,
}

/// Parameter grid of the exact oracle checks.
pub fn oracle_grid() -> Vec<WalkConfig> {
    let mut grid = Vec::new();
    for alpha in [0.0, 1.0, -1.0, 2.0] {
        for delta in [0.5, 1.0, 2.0] {
            grid.push(WalkConfig::new(alpha, delta).expect("valid grid point"));
        }
    }
    grid
}

fn special_checks(sizes: &Sizes, checks: &mut Vec<Check>) -> Result<()> {
    let grid = log_grid(1e-4, 1e4, sizes.grid_points);
    for c in check_inequalities(&grid)? {
        checks.push(Check {
            name: format!("special.{}", c.name),
            passed: c.passed(),
            measured: c.violations as f64,
            tolerance: 0.0,
            margin: c.min_slack,
            detail: format!("{} grid points, smallest slack {:e}", c.points, c.min_slack),
        });
    }
    let k = k_constant(0.0, 1.0)?;
    let ln4 = 4f64.ln();
    checks.push(Check::at_most(
        "constants.k_constant_0_1",
        (k - 1.0 / ln4).abs(),
        1e-12,
        format!("K(0, 1) = {k}"),
    ));
    let gap = digamma(1.0)? - digamma(0.5)?;
    checks.push(Check::at_most(
        "constants.digamma_gap",
        (gap - ln4).abs(),
        1e-12,
        format!("digamma(1) - digamma(1/2) = {gap}"),
    ));
    let mut worst = 0.0f64;
    for alpha in [-1.0, 0.0, 0.5, 1.0] {
        for delta in [0.5, 1.0, 3.0] {
            let c = WalkConfig::new(alpha, delta)?;
            for x in [1u64, 10, 100, 1000, 10_000] {
                let a = mean_s(&c, x)?;
                let b = mean_s_telescoped(&c, x)?;
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    checks.push(Check::at_most(
        "analytic.telescoped_mean",
        worst,
        1e-9,
        "direct and telescoped E[S_x] up to x = 10^4".into(),
    ));
    Ok(())
}

fn oracle_checks(sizes: &Sizes, checks: &mut Vec<Check>) -> Result<()> {
    let grid = oracle_grid();
    let n_max = sizes.max_steps;
    let mut norm_err = 0.0f64;
    let mut exact_norm_bad = 0usize;
    let mut tv_float = 0.0f64;
    let mut tv_exact = 0.0f64;
    for cfg in &grid {
        for n in 1..=n_max {
            norm_err = norm_err.max((enumerate_lerrw(cfg, n, Arithmetic::Float)?.total() - 1.0).abs());
            let exact = enumerate_lerrw(cfg, n, Arithmetic::Exact)?;
            if exact.exact_total() != Some(num_traits::One::one()) {
                exact_norm_bad += 1;
            }
            tv_float = tv_float.max(equivalence_distance(cfg, n, Arithmetic::Float)?.distance);
            tv_exact = tv_exact.max(equivalence_distance(cfg, n, Arithmetic::Exact)?.distance);
        }
    }
    let span = format!("alpha in {{0, 1, -1, 2}}, delta in {{1/2, 1, 2}}, n <= {n_max}");
    checks.push(Check::at_most("oracle.normalization.float", norm_err, 1e-10, span.clone()));
    checks.push(Check::at_most(
        "oracle.normalization.exact",
        exact_norm_bad as f64,
        0.0,
        span.clone(),
    ));
    checks.push(Check::at_most("oracle.equivalence.float", tv_float, 1e-10, span.clone()));
    checks.push(Check::at_most("oracle.equivalence.exact", tv_exact, 0.0, span.clone()));

    let reports: Vec<(MartingaleReport, MartingaleReport)> = grid
        .iter()
        .map(|c| {
            Ok((
                martingale_check(c, n_max, Arithmetic::Float)?,
                martingale_check(c, n_max, Arithmetic::Exact)?,
            ))
        })
        .collect::<Result<_>>()?;
    let worst = |f: &dyn Fn(&MartingaleReport) -> f64, exact: bool| {
        reports
            .iter()
            .map(|(fl, ex)| f(if exact { ex } else { fl }))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let dev = |r: &MartingaleReport| r.max_deviation;
    let excess = |r: &MartingaleReport| r.max_supermartingale_excess;
    let full = |r: &MartingaleReport| r.max_full_sum_deviation;
    let below = |r: &MartingaleReport| r.max_vertex_sum_deviation;
    checks.push(Check::at_most("oracle.martingale.float", worst(&dev, false), 1e-12, span.clone()));
    checks.push(Check::at_most("oracle.martingale.exact", worst(&dev, true), 0.0, span.clone()));
    checks.push(Check::at_most(
        "oracle.supermartingale.float",
        worst(&excess, false),
        1e-12,
        span.clone(),
    ));
    checks.push(Check::at_most(
        "oracle.supermartingale.exact",
        worst(&excess, true),
        0.0,
        span.clone(),
    ));
    checks.push(Check::at_most(
        "oracle.theta_decomposition.all_edges",
        worst(&full, true),
        0.0,
        "Θ_m = Σ_x s_{φ_m(x)}(x) over every edge, pre-return nodes".into(),
    ));
    checks.push(Check::at_most(
        "oracle.theta_decomposition.below_walker",
        worst(&below, true),
        0.0,
        "Θ_m = Σ_{x<X_m} s_{φ_m(x)}(x), pre-return nodes; edges above the walker \
         crossed an even number of times are omitted by this form"
            .into(),
    ));

    let mut interleave_bad = 0usize;
    let mut bound_bad = 0usize;
    let mut min_slack = f64::INFINITY;
    for alpha in [-1.0, 0.0, 0.5, 1.0] {
        for delta in [0.5, 1.0, 2.0, 5.0] {
            let cfg = WalkConfig::new(alpha, delta)?;
            for x in 0..=sizes.s_sites {
                let s = s_values(&cfg, x, sizes.s_terms)?;
                interleave_bad += s.interleaving_violations();
                let slack = s.bracket.0 - s_inf_lower_bound(&cfg, x);
                min_slack = min_slack.min(slack);
                if slack < 0.0 {
                    bound_bad += 1;
                }
            }
        }
    }
    let s_span = format!(
        "x <= {}, alpha in {{-1, 0, 1/2, 1}}, delta in {{1/2, 1, 2, 5}}, j <= {}",
        sizes.s_sites, sizes.s_terms
    );
    checks.push(Check::at_most("oracle.s_interleaving", interleave_bad as f64, 0.0, s_span.clone()));
    checks.push(Check {
        name: "oracle.s_inf_lower_bound".into(),
        passed: bound_bad == 0,
        measured: bound_bad as f64,
        tolerance: 0.0,
        margin: min_slack,
        detail: format!("{s_span}; lower bracket end s_2k against 1/(2f(0,x)+delta)"),
    });
    Ok(())
}

fn environment_checks(sizes: &Sizes, checks: &mut Vec<Check>) -> Result<()> {
    let configs = [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (1.0, 3.0), (0.25, 0.5)];
    let mut violations = 0usize;
    let mut tested = 0usize;
    let mut min_margin = f64::INFINITY;
    for k in 0..sizes.environments {
        let (a, d) = configs[k as usize % configs.len()];
        let mut env = Environment::sampled(WalkConfig::new(a, d)?, environment_seed(7, k))?;
        for x in 1..=sizes.hitting_x {
            let t = env.log_expected_hitting_time(x);
            let b = env.hitting_bounds(x, sizes.hitting_x)?;
            let lo = t - b.log_lower;
            let hi = (b.log_upper - t).min(b.log_upper_posrec.map_or(f64::INFINITY, |u| u - t));
            tested += 1;
            min_margin = min_margin.min(lo.min(hi));
            if lo < -1e-12 || hi < -1e-12 {
                violations += 1;
            }
        }
    }
    checks.push(Check {
        name: "environment.hitting_sandwich".into(),
        passed: violations == 0,
        measured: violations as f64,
        tolerance: 0.0,
        margin: min_margin,
        detail: format!("{tested} (environment, x) pairs; margin in log units"),
    });
    Ok(())
}

/// Run every deterministic invariant suite and collect the outcomes.
pub fn verify_all(profile: Profile) -> Result<VerifyReport> {
    let sizes = profile.sizes();
    let mut checks = Vec::new();
    special_checks(&sizes, &mut checks)?;
    oracle_checks(&sizes, &mut checks)?;
    environment_checks(&sizes, &mut checks)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    Ok(VerifyReport {
        profile,
        passed: failed.is_empty(),
        failed,
        checks,
    })
}
