//! Batch front-end for the conveyor-belt transport simulations.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "conveyor", version, about = "Atom transport in an optical conveyor belt")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for optimizer restarts and plant noise (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Fidelity against transport duration for several protocols.
    Sweep,
    /// Optimized fidelity over depth and duration, with the transition curve.
    Landscape,
    /// Optimized trajectories along decreasing durations.
    Optimize,
    /// Interferometer contrast after round trips.
    Interferometer,
    /// Path length, energy spread and speed-limit bounds.
    Geometry,
    /// Pre-distorted drive for the actuator model.
    Control,
}

fn run(cli: Cli) -> Result<usize, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse(&format!(r#"{{"spec_version": "{}"}}"#, config::SPEC_VERSION))?,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = cli.format.or(config.output.format).unwrap_or(Format::Csv);
    std::fs::create_dir_all(&out)?;
    config.output.dir = Some(out.clone());
    config.output.format = Some(format);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start workers: {e}")))?;
    let ctx = Context { config, out, format };
    pool.install(|| match cli.command {
        Command::Sweep => commands::sweep(&ctx),
        Command::Landscape => commands::landscape(&ctx),
        Command::Optimize => commands::optimize(&ctx),
        Command::Interferometer => commands::interferometer(&ctx),
        Command::Geometry => commands::geometry(&ctx),
        Command::Control => commands::control(&ctx),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} cell(s) failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
