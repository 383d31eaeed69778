//! `hardstop`: stress maps, contact boundaries, protection metrics, shape
//! optimization and surge simulation from one TOML configuration.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::Finished;
use config::{ConfigError, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "hardstop",
    version,
    about = "Multi-DOF hard-stop design for compliant mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Signed-plane stress heatmaps, one CSV per target and slice.
    StressMap(Common),
    /// Contact and safe boundaries, protection metrics and trajectory checks.
    Evaluate(Common),
    /// Shape optimization of the hard-stop surfaces.
    Optimize(Common),
    /// Normal and surged load cycles with and without the hard stop.
    Simulate(Common),
    /// Contact boundary only.
    Boundary(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directions per slice, overriding `grid.n_alpha`.
    #[arg(long)]
    grid_alpha: Option<usize>,
    /// Slices over [0°, 90°], overriding `grid.n_sep`.
    #[arg(long)]
    grid_sep: Option<usize>,
    /// Optimization seed, overriding `optimization.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<hardstop::Error>() {
            use hardstop::Error::*;
            return match e {
                InvalidInput(_)
                | InvalidGeometry(_)
                | ZeroClearance { .. }
                | BaseStress { .. }
                | OptimizationSetup(_)
                | Format { .. }
                | Csv(_) => EXIT_INFEASIBLE,
                OutOfHull { .. } | Unbounded { .. } | GridMismatch(_) | Simulation { .. } => EXIT_NUMERICAL,
                Io(_) => 1,
            };
        }
    }
    1
}

fn run(cli: Cli) -> Result<Finished> {
    let (common, cmd): (&Common, fn(&RunConfig) -> Result<Finished>) = match &cli.command {
        Command::StressMap(c) => (c, commands::stress_map),
        Command::Evaluate(c) => (c, commands::evaluate),
        Command::Optimize(c) => (c, commands::optimize),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Boundary(c) => (c, commands::boundary),
    };
    let mut cfg = RunConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        out: common.out.clone(),
        grid_alpha: common.grid_alpha,
        grid_sep: common.grid_sep,
        seed: common.seed,
    })?;
    cmd(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Finished::Ok) => ExitCode::SUCCESS,
        Ok(Finished::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
