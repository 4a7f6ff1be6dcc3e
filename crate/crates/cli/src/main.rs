//! `pgsplit` command-line driver.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pgsplit::samplers::Scheme;

mod commands;
mod config;
mod output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl From<pgsplit::Error> for CliError {
    fn from(e: pgsplit::Error) -> Self {
        match e {
            pgsplit::Error::NonFinite { .. } => Self::Numerical(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(format!("i/o: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "pgsplit",
    version,
    about = "Exact-harmonic splitting samplers for kinetic Langevin dynamics"
)]
struct Cli {
    /// TOML file with default values; explicit flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the CSV table here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the harmonic coefficients against the series and quadrature oracles
    Verify,
    /// Run one chain and write its states
    Sample(SampleArgs),
    /// Synchronously coupled pairs: mean distance over time and fitted rates
    Couple(CoupleArgs),
    /// Stationary-moment bias against quadrature references over a step-size list
    Bias(BiasArgs),
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// oscillation, logistic or gaussian
    #[arg(long)]
    pub model: Option<String>,
    /// Diagonal stiffness for the gaussian model, e.g. 1,10
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Friction
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Master seed (falls back to $PGSPLIT_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: ModelArgs,
    /// pg, pgp or obabo
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Keep every n-th state
    #[arg(long)]
    pub thin: Option<usize>,
    /// Initial state x_1..x_d,v_1..v_d (default: zeros)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Option<Vec<f64>>,
    /// f64 or f32
    #[arg(long)]
    pub precision: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub common: ModelArgs,
    /// Comma-separated schemes, run one after another
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<Scheme>>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// First chain start x..,v.. (default: all ones)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init_a: Option<Vec<f64>>,
    /// Second chain start x..,v.. (default: all minus ones)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init_b: Option<Vec<f64>>,
}

#[derive(Args, Debug, Default)]
pub struct BiasArgs {
    #[command(flatten)]
    pub common: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<Scheme>>,
    /// Comma-separated step sizes
    #[arg(long = "h", value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    /// Post-burn-in steps per (scheme, h)
    #[arg(long)]
    pub steps: Option<usize>,
    /// Moment ids, e.g. E[x1^2],E[x1v1]
    #[arg(long, value_delimiter = ',')]
    pub moments: Option<Vec<String>>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    let out = cli.output.as_deref();
    match cli.command {
        Command::Verify => commands::verify(out),
        Command::Sample(args) => commands::sample(args, &file, out),
        Command::Couple(args) => commands::couple(args, &file, out),
        Command::Bias(args) => commands::bias(args, &file, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(1),
                CliError::Numerical(_) => ExitCode::from(2),
            }
        }
    }
}
