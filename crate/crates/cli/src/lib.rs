//! Experiment runner behind the `kalikow` binary.
//!
//! A run loads a configuration (a file or a bundled preset), resolves the
//! seed, executes the experiment, evaluates the `[[assert]]` thresholds and
//! writes `<outdir>/<name>/report.json` together with `raw.csv`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod presets;
pub mod report;
pub mod system;

use config::ExperimentConfig;
use error::CliError;
use experiments::Outcome;
use report::Report;
use std::path::PathBuf;

pub const SEED_ENV: &str = "KALIKOW_SEED";
pub const DEFAULT_OUTDIR: &str = "kalikow-out";

/// Where the configuration comes from.
#[derive(Debug, Clone)]
pub enum Source {
    File(PathBuf),
    Preset(String),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Subcommand the user invoked; `run` accepts every experiment kind.
    pub command: String,
    /// Optional verb, which must equal the experiment kind.
    pub verb: Option<String>,
    pub source: Source,
    pub assert: bool,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub outdir: Option<PathBuf>,
    /// Value of the seed environment variable, if set.
    pub env_seed: Option<String>,
}

impl RunOptions {
    pub fn new(command: &str, source: Source) -> Self {
        Self {
            command: command.into(),
            verb: None,
            source,
            assert: false,
            seed: None,
            workers: None,
            outdir: None,
            env_seed: std::env::var(SEED_ENV).ok(),
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub report: Report,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Execute a parsed configuration without touching the file system.
pub fn evaluate(cfg: &ExperimentConfig, seed: u64, workers: usize) -> Result<(Report, Outcome), CliError> {
    let outcome = experiments::execute(cfg, seed, workers)?;
    let report = Report::new(cfg, seed, &outcome)?;
    Ok((report, outcome))
}

pub fn run(opts: &RunOptions) -> Result<RunOutput, CliError> {
    let mut cfg = match &opts.source {
        Source::File(path) => config::load_config(path)?,
        Source::Preset(name) => presets::load_preset(name)?,
    };
    let kind = cfg.experiment.kind();
    if opts.command != "run" && opts.command != cfg.experiment.command() {
        return Err(CliError::ConfigInvalid(format!(
            "experiment kind `{kind}` belongs to `{}`, not `{}`",
            cfg.experiment.command(),
            opts.command
        )));
    }
    if let Some(verb) = &opts.verb {
        if verb != kind {
            return Err(CliError::ConfigInvalid(format!("verb `{verb}` does not match experiment kind `{kind}`")));
        }
    }
    let seed = cfg.resolve_seed(opts.seed, opts.env_seed.as_deref())?;
    let workers = opts.workers.or(cfg.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::ConfigInvalid("workers must be at least 1".into()));
    }
    let outdir = opts.outdir.clone().or_else(|| cfg.outdir.clone()).unwrap_or_else(|| DEFAULT_OUTDIR.into());
    let (report, outcome) = evaluate(&cfg, seed, workers)?;
    let dir = report::write_artifacts(&outdir, &report, &outcome)?;
    if opts.assert && !report.passed {
        return Err(CliError::StatisticalAssertFailed(report.failures().join("; ")));
    }
    Ok(RunOutput { dir, report })
}
