//! `awgnbc`: figures, rate regions, design optimisation and Monte-Carlo checks.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Overrides;
use config::{Format, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "awgnbc", version, about = "Linear feedback coding for the Gaussian broadcast channel")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Cap on the inner blocklength searched by the optimizer.
    #[arg(long, global = true)]
    lmax: Option<usize>,
    /// Monte-Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Blocklength upper bound against target sum-rate.
    FigBlocklength,
    /// Optimised sum-rate against feedback noise.
    FigSumrate,
    /// Two-user rate pairs over the power split.
    RateRegion,
    /// Monte-Carlo validation of a linear feedback code.
    Simulate,
    /// Sum-rate optimisation at one feedback noise level.
    Optimize,
}

const DEFAULT_SEED: u64 = 1;

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.lmax == Some(0) {
        return Err(CliError::Validation("--lmax must be >= 1".into()));
    }
    if cli.trials == Some(0) {
        return Err(CliError::Validation("--trials must be >= 1".into()));
    }
    let ov = Overrides {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        format: cli.format.or(cfg.format).unwrap_or_default(),
        lmax: cli.lmax,
        trials: cli.trials,
        verbose: cli.verbose,
    };
    let out = cli.out.clone().or(cfg.out.clone());
    let (artifact, verdict) = match cli.command {
        Command::FigBlocklength => (commands::fig_blocklength(&cfg.fig_blocklength, &ov)?, None),
        Command::FigSumrate => (commands::fig_sumrate(&cfg.fig_sumrate, &ov)?, None),
        Command::RateRegion => (commands::rate_region_cmd(&cfg.rate_region, &ov)?, None),
        Command::Simulate => commands::simulate_cmd(&cfg.simulate, &ov)?,
        Command::Optimize => (commands::optimize_cmd(&cfg.optimize, &ov)?, None),
    };
    artifact.emit(out.as_deref())?;
    verdict.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).format_target(false).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("awgnbc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
