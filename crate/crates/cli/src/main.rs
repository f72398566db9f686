//! `bautin`: experiments on the delayed leukemia model from the command line.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::{ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "bautin",
    version,
    about = "Hopf curve, simulations and Bautin zones of the delayed leukemia model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config value, e.g. `--set model.delta=0.002`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory (created if missing).
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,

    /// Worker threads for independent runs; 0 uses all cores.
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,

    /// Accepted for interface stability; nothing here is random.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample r*(delta) along the Hopf curve.
    HopfCurve,
    /// Integrate one trajectory per history amplitude.
    Simulate,
    /// Verdict per (point, c).
    Classify,
    /// Bisect the history amplitude separating the two attractors.
    Threshold,
    /// Verdict table over points x amplitudes.
    Sweep,
    /// Rasterize the normal-form zone diagram.
    Zones,
}

fn run(cli: Cli) -> anyhow::Result<commands::Failures> {
    let config = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| ConfigError(format!("cannot create {}: {e}", cli.out.display())))?;
    let ctx = Ctx {
        config,
        out: cli.out,
        jobs: cli.jobs,
    };
    match cli.command {
        Command::HopfCurve => commands::hopf_curve_cmd(&ctx),
        Command::Simulate => commands::simulate_cmd(&ctx),
        Command::Classify => commands::classify_cmd(&ctx),
        Command::Threshold => commands::threshold_cmd(&ctx),
        Command::Sweep => commands::sweep_cmd(&ctx),
        Command::Zones => commands::zones_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} computation(s) failed");
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
