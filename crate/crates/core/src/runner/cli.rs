//! `spatfun` command-line interface.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, ExperimentKind};
use super::{execute, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spatfun", version, about = "Monte Carlo experiments for spatially indexed functional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Intensity profile and Type A/B/C classification of a design.
    Classify(CommonArgs),
    /// Loss of the sample mean.
    McMean(CommonArgs),
    /// Loss of the empirical covariance operator.
    McCov(CommonArgs),
    /// Distance between the covariance operator and X(0) (x) X(0).
    McXstar(CommonArgs),
    /// Leading EFPCs of the two-component field near the origin.
    Figure2(CommonArgs),
    /// Every applicable bound along the ladder.
    Bounds(CommonArgs),
    /// Empirical convergence rate of an MC loss.
    Rates(CommonArgs),
    /// Kriging weights and prediction error.
    Kriging(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "SPATFUN_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &CommonArgs) {
        match self {
            Command::Classify(a) => (ExperimentKind::Classify, a),
            Command::McMean(a) => (ExperimentKind::McMean, a),
            Command::McCov(a) => (ExperimentKind::McCov, a),
            Command::McXstar(a) => (ExperimentKind::McXstar, a),
            Command::Figure2(a) => (ExperimentKind::McEfpc, a),
            Command::Bounds(a) => (ExperimentKind::Bounds, a),
            Command::Rates(a) => (ExperimentKind::Rates, a),
            Command::Kriging(a) => (ExperimentKind::Kriging, a),
        }
    }
}

/// Runs `execute` on a pool of `threads` workers (rayon's default when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
    }
}

fn run(kind: ExperimentKind, args: &CommonArgs) -> Result<Outcome> {
    let mut cfg = match (&args.config, kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, ExperimentKind::McEfpc) => ExperimentConfig::figure2(args.seed.unwrap_or(0)),
        (None, _) => return Err(Error::Config("--config is required for this subcommand".into())),
    };
    cfg.experiment = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("spatfun-out"));
    with_threads(args.threads, || execute(&cfg, &out_dir, args.svg))
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, args) = cli.command.parts();
    match run(kind, args) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            let lines = outcome
                .summary
                .iter()
                .cloned()
                .chain(outcome.files.iter().map(|f| format!("wrote {}", f.display())));
            for line in lines {
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}
