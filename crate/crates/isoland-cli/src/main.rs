use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use isoland_cli::commands;
use isoland_cli::config::RunConfig;
use isoland_cli::CliError;

/// Numerical laboratory for the isotropic Landau equation with radially
/// symmetric data.
#[derive(Parser)]
#[command(name = "isoland", version)]
struct Cli {
    /// Path to a key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the equation; writes monitors.csv, snapshots, manifest.json.
    Simulate,
    /// Run the functional-inequality suite; writes inequalities.csv, summary.json.
    Verify,
    /// Spectral lower-bound ladder; writes lambda.csv.
    Eigen,
    /// Iteration diagnostic on a stored trajectory; writes moser.csv.
    Moser,
    /// Print the critical exponent and admissibility table for a dimension.
    GammaStar {
        /// Spatial dimension.
        #[arg(short = 'd', long)]
        dim: usize,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&load_config(cli)?),
        Command::Verify => commands::cmd_verify(&load_config(cli)?),
        Command::Eigen => commands::cmd_eigen(&load_config(cli)?),
        Command::Moser => commands::cmd_moser(&load_config(cli)?),
        Command::GammaStar { dim } => commands::cmd_gamma_star(*dim),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isoland: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
