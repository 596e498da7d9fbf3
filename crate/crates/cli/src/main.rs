use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod output;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MMWAVE_SV_OUTPUT_DIR";

/// Misalignment-aware Saleh-Valenzuela channel model for 60 GHz fixed
/// uplinks.
///
/// Exit codes: 0 success, 1 usage error, 2 data or domain error, 3 I/O error.
#[derive(Debug, Parser)]
#[command(name = "mmwave-sv", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Master RNG seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (or file for `extract`).
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output: Option<PathBuf>,

    /// TOML file with simulation settings: truncation_multiple,
    /// shadowing_sigma, beta_11_sq, seed, delay_resolution, max_delay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Format of the report printed on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total misalignment and parameter bin for an elevation/azimuth offset.
    Angle(AngleArgs),
    /// Simulate power delay profiles for a scenario and misalignment.
    Simulate(SimulateArgs),
    /// Estimate model parameters from PDP trace files.
    Extract(ExtractArgs),
    /// Goodness-of-fit of a simulated trace against a measured one.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct AngleArgs {
    /// Elevation misalignment, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Azimuth misalignment, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// o2i or o2o.
    #[arg(long)]
    pub scenario: String,
    /// Total misalignment, degrees.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["theta", "phi"])]
    pub psi: Option<f64>,
    /// Elevation misalignment, degrees (with --phi).
    #[arg(long, allow_negative_numbers = true, requires = "phi")]
    pub theta: Option<f64>,
    /// Azimuth misalignment, degrees (with --theta).
    #[arg(long, allow_negative_numbers = true, requires = "theta")]
    pub phi: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub realizations: usize,
    /// Parameter file to use instead of the built-in tables.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Ray loop bound k (rays while τ < k·γ).
    #[arg(long)]
    pub truncation_multiple: Option<f64>,
    /// Shadowing standard deviation, dB.
    #[arg(long)]
    pub shadowing_sigma: Option<f64>,
    /// PDP bin width, ns.
    #[arg(long)]
    pub delay_resolution: Option<f64>,
    /// PDP window, ns.
    #[arg(long)]
    pub max_delay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Trace files or directories of `.csv` traces.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Clusters per profile; defaults to 2 for o2i and 3 for o2o.
    #[arg(long)]
    pub n_clusters: Option<usize>,
    /// Scenario, when the traces do not carry it.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Total misalignment used to label the bin, when the traces do not carry it.
    #[arg(long, allow_negative_numbers = true)]
    pub psi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub measured: PathBuf,
    pub simulated: PathBuf,
    /// Ignore bins this many dB below the peak in the RMS delay spread.
    #[arg(long)]
    pub floor_db: Option<f64>,
    /// Scale both profiles to a 0 dB peak before comparing.
    #[arg(long)]
    pub normalize: bool,
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
    match commands::run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
