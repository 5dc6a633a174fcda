//! Experiment runner behind the `specshift` binary.
//!
//! `specshift <command> <config.json> [--seed N] [--output PATH] [--format csv|json]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub use config::{Experiment, ExperimentConfig, Format};
pub use error::CliError;
pub use experiments::{run_commuting, run_divergence, run_ratio_search};
pub use report::Report;
pub use verify::run_verify;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SPECSHIFT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "specshift", version, about = "Increment ratios and divergent constructions for functions of self-adjoint matrices")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub command: Experiment,
    /// JSON configuration file.
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides the config output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match exp {
        Experiment::RatioSearch => run_ratio_search(cfg),
        Experiment::Divergence => run_divergence(cfg),
        Experiment::Commuting => run_commuting(cfg),
        Experiment::Verify => run_verify(cfg),
    }
}

/// Loads the config and applies command-line overrides.
pub fn load_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    if let Some(f) = args.format {
        cfg.format = Some(f);
    }
    Ok(cfg)
}

/// Writes the main table (to `output` or standard output) and the side
/// files next to it.
pub fn write_report(report: &Report, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let text = report.render(cfg.format())?;
    let io = |what: &PathBuf, e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", what.display()));
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| io(path, e))?;
            for (name, body) in &report.side_files {
                let side = path.with_file_name(name);
                std::fs::write(&side, body).map_err(|e| io(&side, e))?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| io(&PathBuf::from("<stdout>"), e))?;
        }
    }
    Ok(())
}

/// Sizes the global thread pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool that already exists (e.g. in tests) keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Full command execution; returns the process exit code.
pub fn execute(args: &Args) -> i32 {
    let result = configure_threads().and_then(|_| load_config(args)).and_then(|cfg| {
        let report = run(args.command, &cfg)?;
        write_report(&report, &cfg)?;
        if report.ok {
            Ok(())
        } else {
            Err(CliError::Failed("some checks failed".into()))
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("specshift: {e}");
            e.exit_code()
        }
    }
}
