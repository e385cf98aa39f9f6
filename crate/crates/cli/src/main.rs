//! `glacier-dyn`: equilibria, Hopf analysis, simulations and sweeps of the
//! conceptual ice-albedo / precipitation climate model.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glacier_dyn::simulator::SimModel;

/// Exit codes are part of the command-line contract.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const DOMAIN: u8 = 3;
    pub const VERIFY: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "glacier-dyn", version, about = "Conceptual glacial-cycle climate model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON parameter file with `physical`, `model` and/or `simulation` blocks.
    #[arg(long, value_name = "FILE")]
    pub params: PathBuf,
    /// Override a value by dotted path, e.g. `model.albedo.steepness=0.02`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic scales of the physical parameter block.
    Scales {
        #[command(flatten)]
        common: Common,
    },
    /// Equilibria with their classification, thresholds and Hopf data.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Integrate one trajectory and emit it as CSV or JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
        /// Final nondimensional time.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, value_parser = parse_model)]
        model: Option<SimModel>,
        /// Add dimensional columns (needs a `physical` block).
        #[arg(long)]
        dimensional: bool,
        /// Override the snow-line offset ε.
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
    },
    /// Classification and limit cycles along a μ grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Defaults to 0.5 μ₀ when the tracked equilibrium has a Hopf point.
        #[arg(long)]
        mu_min: Option<f64>,
        /// Defaults to 1.5 μ₀.
        #[arg(long)]
        mu_max: Option<f64>,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Sampled nullclines (θ, f, g).
    Nullclines {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        theta_min: f64,
        #[arg(long, default_value_t = 2.5)]
        theta_max: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Closed forms against numerical oracles; exits 4 on any mismatch.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_model(s: &str) -> Result<SimModel, String> {
    s.parse().map_err(|e: glacier_dyn::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scales { common } => commands::scales(&common),
        Command::Analyze { common, mu } => commands::analyze(&common, mu),
        Command::Simulate { common, mu, t_end, model, dimensional, epsilon } => {
            commands::simulate(&common, &commands::SimulateArgs { mu, t_end, model, dimensional, epsilon })
        }
        Command::Sweep { common, mu_min, mu_max, points } => commands::sweep(&common, mu_min, mu_max, points),
        Command::Nullclines { common, theta_min, theta_max, points } => {
            commands::nullclines(&common, (theta_min, theta_max), points)
        }
        Command::Verify { common, mu, seed } => commands::verify(&common, mu, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
