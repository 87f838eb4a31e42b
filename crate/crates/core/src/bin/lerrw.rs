use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lerrw::analytic::{k_constant, moments, predict_scaling, slln_target};
use lerrw::environment::{summability, Environment};
use lerrw::harness::{
    self, environment_seed, replica_seed, verify_all, ExperimentConfig, ExperimentKind,
    OutputFormat, Profile,
};
use lerrw::oracle::{enumerate_lerrw, Arithmetic};
use lerrw::simulator::{
    lerrw_run, quenched_run, write_trajectories_csv, CheckpointSchedule, RunOptions,
    TrajectorySummary,
};
use lerrw::{Error, WalkConfig};

#[derive(Parser)]
#[command(name = "lerrw", version, about = "Reinforced random walks on the half-line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate walks and write their checkpoints.
    Simulate(SimulateArgs),
    /// Enumerate the exact law of all paths of a given length.
    Enumerate(EnumerateArgs),
    /// Print analytic constants and predictions for one parameter pair.
    Constants(ConstantsArgs),
    /// Export a sampled environment as i,p_i,S_i,h_i,T_i.
    Environment(EnvironmentArgs),
    /// Run a scaling, law-of-large-numbers, moment or hitting-time experiment.
    Experiment(ExperimentArgs),
    /// Run the deterministic verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Limsup,
    Slln,
    Moments,
    Hitting,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Standard,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 2024)]
    master_seed: u64,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
    /// Walk in a sampled environment instead of the reinforced walk.
    #[arg(long)]
    quenched: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    steps: usize,
    /// Exact rational probabilities (integer alpha only).
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    /// Site at which to evaluate the moments of S_x.
    #[arg(long)]
    sites: Option<u64>,
}

#[derive(Args)]
struct EnvironmentArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    sites: u64,
    #[arg(long, default_value_t = 2024)]
    master_seed: u64,
    /// Which environment of the master seed to export.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: KindArg,
    /// JSON file with an experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Horizon in steps (limsup).
    #[arg(long)]
    steps: Option<u64>,
    /// Horizon in sites (slln, moments, hitting).
    #[arg(long)]
    sites: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    step_budget: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write per-configuration summaries as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "standard")]
    profile: ProfileArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Verification,
    Invalid(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let cfg = WalkConfig::new(a.alpha, a.delta)?;
    let schedule = match a.checkpoints {
        Some(c) => CheckpointSchedule::explicit(c)?,
        None => CheckpointSchedule::default_for(a.steps),
    };
    let opts = RunOptions {
        record_returns: true,
        record_occupation: false,
    };
    let mut runs = Vec::new();
    for k in 0..a.seeds {
        let seed = replica_seed(a.master_seed, k);
        let traj = if a.quenched {
            let env = Environment::sampled(cfg, environment_seed(a.master_seed, k))?;
            quenched_run(&env, seed, a.steps, &schedule, opts)?
        } else {
            lerrw_run(cfg, seed, a.steps, &schedule, opts)?
        };
        runs.push((seed, traj));
    }
    match a.format {
        Format::Csv => {
            let mut w = output(a.out.as_deref())?;
            write_trajectories_csv(runs.iter().map(|(s, t)| (*s, t)), &mut w)?;
            w.flush()?;
        }
        Format::Json => {
            let summaries: Vec<_> = runs
                .iter()
                .filter_map(|(s, t)| TrajectorySummary::new(*s, t, opts))
                .collect();
            let doc = json!({
                "alpha": cfg.alpha(),
                "delta": cfg.delta(),
                "steps": a.steps,
                "quenched": a.quenched,
                "runs": summaries,
            });
            write_json(a.out.as_deref(), &doc)?;
        }
    }
    Ok(())
}

fn enumerate(a: EnumerateArgs) -> Result<(), Failure> {
    let cfg = WalkConfig::new(a.alpha, a.delta)?;
    let mode = if a.exact {
        Arithmetic::Exact
    } else {
        Arithmetic::Float
    };
    let dist = enumerate_lerrw(&cfg, a.steps, mode)?;
    match a.format {
        Format::Json => {
            let mut w = output(a.out.as_deref())?;
            dist.write_json(&mut w)?;
            w.flush()?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
            w.write_record(["path", "probability", "rational"]).map_err(Error::from)?;
            for e in dist.entries() {
                let rational = e
                    .rational
                    .as_ref()
                    .map(|r| format!("{}/{}", r.numer(), r.denom()))
                    .unwrap_or_default();
                w.serialize((e.path.to_string(), e.probability, rational))
                    .map_err(Error::from)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn constants(a: ConstantsArgs) -> Result<(), Failure> {
    let cfg = WalkConfig::new(a.alpha, a.delta)?;
    let class = cfg.classify(0);
    let mut doc = json!({
        "alpha": cfg.alpha(),
        "delta": cfg.delta(),
        "recurrence": class.verdict,
        "summability": summability(&cfg),
        "k_constant": k_constant(cfg.alpha(), cfg.delta()).ok(),
        "scaling_law": predict_scaling(&cfg).ok(),
        "slln_target": slln_target(&cfg).ok(),
    });
    if let Some(x) = a.sites {
        let m = moments(&cfg, x)?;
        doc["sites"] = json!(x);
        doc["mean_s"] = json!(m.mean);
        doc["var_s"] = json!(m.variance);
    }
    write_json(None, &doc)
}

fn environment(a: EnvironmentArgs) -> Result<(), Failure> {
    let cfg = WalkConfig::new(a.alpha, a.delta)?;
    let mut env = Environment::sampled(cfg, environment_seed(a.master_seed, a.index))?;
    let mut w = output(a.out.as_deref())?;
    env.write_snapshot_csv(a.sites, &mut w)?;
    w.flush()?;
    Ok(())
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let kind = match a.kind {
        KindArg::Limsup => ExperimentKind::Limsup,
        KindArg::Slln => ExperimentKind::Slln,
        KindArg::Moments => ExperimentKind::Moments,
        KindArg::Hitting => ExperimentKind::Hitting,
    };
    let mut e = match &a.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    e.kind = kind;
    if a.alpha.is_some() || a.delta.is_some() {
        let from_grid = |f: fn(&WalkConfig) -> f64| {
            let mut v: Vec<f64> = Vec::new();
            for c in &e.configs {
                if !v.contains(&f(c)) {
                    v.push(f(c));
                }
            }
            v
        };
        let alphas = a.alpha.clone().unwrap_or_else(|| from_grid(WalkConfig::alpha));
        let deltas = a.delta.clone().unwrap_or_else(|| from_grid(WalkConfig::delta));
        let mut grid = Vec::new();
        for &al in &alphas {
            for &dl in &deltas {
                grid.push(WalkConfig::new(al, dl)?);
            }
        }
        e.configs = grid;
    }
    match (a.steps, a.sites) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig("give either --steps or --sites, not both".into()))
        }
        (Some(h), None) | (None, Some(h)) => e.horizon = h,
        (None, None) => {}
    }
    if let Some(v) = a.seeds {
        e.seeds = v;
    }
    if let Some(v) = a.master_seed {
        e.master_seed = v;
    }
    if let Some(v) = &a.checkpoints {
        e.checkpoints = Some(v.clone());
    }
    if let Some(v) = a.replicas {
        e.replicas = v;
    }
    if let Some(v) = a.step_budget {
        e.step_budget = v;
    }
    if let Some(v) = a.workers {
        e.workers = v;
    }
    if let Some(v) = &a.out {
        e.out = Some(v.clone());
    }
    if let Some(v) = &a.summary {
        e.summary = Some(v.clone());
    }
    if let Some(f) = a.format {
        e.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    e.validate()?;
    Ok(e)
}

fn experiment(a: ExperimentArgs) -> Result<(), Failure> {
    let e = experiment_config(&a)?;
    let out = harness::run_experiment(&e)?;
    harness::emit(&out, e.format, e.out.as_deref())?;
    match (&e.summary, &e.out, e.format) {
        (Some(p), _, _) => write_json(Some(p), &out.summaries)?,
        (None, Some(_), OutputFormat::Csv) => write_json(None, &out.summaries)?,
        _ => {}
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let profile = match a.profile {
        ProfileArg::Quick => Profile::Quick,
        ProfileArg::Standard => Profile::Standard,
    };
    let report = verify_all(profile)?;
    write_json(a.out.as_deref(), &report)?;
    for c in &report.checks {
        eprintln!(
            "{} {} (measured {:e}, tolerance {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Constants(a) => constants(a),
        Command::Environment(a) => environment(a),
        Command::Experiment(a) => experiment(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
