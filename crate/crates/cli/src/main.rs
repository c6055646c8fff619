//! `relcav` — command-line front end for the cavity-motion gate simulator.
//!
//! Subcommands cover the full workflow: `coeffs` computes and caches the
//! junction coefficient blocks, `evolve` runs one configured trajectory and
//! reports the resulting gate and entanglement, `sweep` scans the travel
//! scenario's durations on a grid into a CSV table and an optional vector
//! heatmap, `resonance` reports the repetition resonances order by order,
//! and `validate` runs an invariant suite against the configuration.
//!
//! Exit codes are distinct per failure class: 0 success, 2 configuration,
//! 3 numeric, 4 I/O.

mod commands;
mod config;
mod csv_out;
mod error;
mod heatmap;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{load_config, Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "relcav",
    version,
    about = "Simulator for two-mode squeezing gates generated by non-uniform cavity motion",
    after_help = "The cache directory resolves in order: [output] cache_dir in the \
                  configuration, then the RELCAV_CACHE_DIR environment variable; \
                  --no-cache disables both. Exit codes: 0 success, 2 configuration \
                  error, 3 numeric failure, 4 I/O failure."
)]
struct Cli {
    /// Path to the run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Mode-ladder truncation override: keep modes 1..=K.
    #[arg(long, global = true, value_name = "K")]
    nmax: Option<usize>,
    /// Disable the on-disk coefficient cache for this run.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (and cache) junction coefficient blocks for the configured burns.
    Coeffs,
    /// Evolve the configured trajectory and print the gate/entanglement report.
    Evolve,
    /// Scan the travel-scenario durations on a grid; write CSV and optional heatmap.
    Sweep,
    /// Report resonance times, gains, squeezer parameters, and linearity per order.
    Resonance {
        /// Comma-separated resonance orders to report.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        orders: Vec<usize>,
    },
    /// Run the invariant suite against the configuration.
    Validate,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let Some(path) = &cli.config else {
        return Err(CliError::config(
            "no configuration given; pass --config PATH (see --help for the schema pointer)",
        ));
    };
    let overrides = Overrides {
        out_dir: cli.out.clone(),
        n_max: cli.nmax,
    };
    let cfg = load_config(path, &overrides)?;
    for warning in &cfg.warnings {
        eprintln!("warning: {warning}");
    }
    eprintln!("effective configuration (defaults filled):");
    for line in cfg.effective_toml.lines() {
        eprintln!("  {line}");
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Coeffs => commands::coeffs(&cfg, cli.no_cache),
        Command::Evolve => commands::evolve(&cfg, cli.no_cache),
        Command::Sweep => commands::sweep(&cfg, cli.workers, cli.no_cache),
        Command::Resonance { orders } => commands::resonance(&cfg, orders, cli.no_cache),
        Command::Validate => commands::validate(&cfg, cli.no_cache),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(u8::try_from(err.exit_code()).unwrap_or(1))
        }
    }
}
