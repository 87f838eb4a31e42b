//! Reproducible experiment driver: configuration, records, parallel
//! execution and result files.

mod experiments;
mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::WalkConfig;

pub use experiments::{
    environment_seed, log_resistance_path, moment_estimates, replica_seed, run_hitting_experiment,
    run_limsup_experiment, run_moment_experiment, run_slln_experiment, HittingSummary,
    LimsupSummary, MomentSummary, SllnSummary, HITTING_Z_CUTOFF, MIN_HITTING_REPLICAS,
};
pub use verify::{verify_all, Check, Profile, VerifyReport};

/// Exact header of record CSV files.
pub const CSV_HEADER: &str = "kind,alpha,delta,seed,checkpoint,statistic,value,normalizer,ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Limsup,
    Slln,
    Moments,
    Hitting,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Limsup => "limsup",
            ExperimentKind::Slln => "slln",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Hitting => "hitting",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// One experiment: a kind, a parameter grid and its sampling budget.
///
/// `horizon` is the number of steps for `limsup` and the site index `x` for
/// the other kinds. `seeds` counts walks (`limsup`) or environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub configs: Vec<WalkConfig>,
    pub master_seed: u64,
    pub seeds: u64,
    pub horizon: u64,
    /// Explicit checkpoints; geometric `⌈1.5^k⌉` up to `horizon` if absent.
    pub checkpoints: Option<Vec<u64>>,
    /// Walks per environment in hitting experiments.
    pub replicas: u64,
    /// Total step budget per environment in hitting experiments.
    pub step_budget: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Limsup,
            configs: vec![WalkConfig::new(0.0, 1.0).expect("valid default")],
            master_seed: 2024,
            seeds: 10,
            horizon: 100_000,
            checkpoints: None,
            replicas: 1_000,
            step_budget: 200_000_000,
            workers: 1,
            out: None,
            summary: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, configs: Vec<WalkConfig>) -> Self {
        ExperimentConfig {
            kind,
            configs,
            ..Default::default()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let cfg: ExperimentConfig = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.configs.is_empty() {
            return bad("the parameter grid is empty");
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() || cps.contains(&0) {
                return bad("checkpoints must be a non-empty list of positive integers");
            }
        }
        Ok(())
    }

    /// Checkpoints up to `horizon`, sorted and deduplicated.
    pub fn checkpoint_list(&self) -> Vec<u64> {
        let mut cps = match &self.checkpoints {
            Some(c) => c.iter().copied().filter(|&c| c <= self.horizon).collect(),
            None => crate::simulator::CheckpointSchedule::default_for(self.horizon)
                .points()
                .to_vec(),
        };
        cps.sort_unstable();
        cps.dedup();
        cps
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
    pub checkpoint: u64,
    pub statistic: String,
    pub value: f64,
    pub normalizer: f64,
    pub ratio: f64,
}

impl ExperimentRecord {
    pub(crate) fn new(
        kind: ExperimentKind,
        cfg: &WalkConfig,
        seed: u64,
        checkpoint: u64,
        statistic: &str,
        value: f64,
        normalizer: f64,
    ) -> Self {
        debug_assert!(normalizer > 0.0);
        ExperimentRecord {
            kind,
            alpha: cfg.alpha(),
            delta: cfg.delta(),
            seed,
            checkpoint,
            statistic: statistic.to_string(),
            value,
            normalizer,
            ratio: value / normalizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Summary {
    Limsup(LimsupSummary),
    Slln(SllnSummary),
    Moments(MomentSummary),
    Hitting(HittingSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub summaries: Vec<Summary>,
}

/// Map `f` over `items` on a pool of `workers` threads, keeping input order.
pub(crate) fn parallel_map<T, U, F>(workers: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Run the experiment named by `ecfg.kind`.
pub fn run_experiment(ecfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ecfg.validate()?;
    match ecfg.kind {
        ExperimentKind::Limsup => run_limsup_experiment(ecfg),
        ExperimentKind::Slln => run_slln_experiment(ecfg),
        ExperimentKind::Moments => run_moment_experiment(ecfg),
        ExperimentKind::Hitting => run_hitting_experiment(ecfg),
    }
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize((
            r.kind.name(),
            r.alpha,
            r.delta,
            r.seed,
            r.checkpoint,
            &r.statistic,
            r.value,
            r.normalizer,
            r.ratio,
        ))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_output<W: Write>(output: &ExperimentOutput, format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_records_csv(&output.records, out),
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, output)?;
            writeln!(out)?;
            Ok(())
        }
    }
}

/// Write records to `path` (or standard output) in the chosen format.
pub fn emit(output: &ExperimentOutput, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_output(output, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            write_output(output, format, stdout.lock())?;
        }
    }
    Ok(())
}
