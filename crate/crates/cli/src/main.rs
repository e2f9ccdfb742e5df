//! `ghzclone`: strategy analytics, telecloning Monte Carlo, robustness
//! sweeps and the invariant suite.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ghzclone_core::statekit::NoiseKind;
use ghzclone_core::teleclone::{BellDetector, PrepMode};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ghzclone_core::Error> for CliError {
    fn from(e: ghzclone_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invariant(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "ghzclone", version, about = "Probabilistic cloning analytics and GHZ telecloning simulation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Master seed for Monte Carlo commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file. A `<out>.manifest.json` is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Read every angle argument in degrees.
    #[arg(long, global = true)]
    pub degrees: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probability spectrum of a cloning strategy.
    Spectrum(SpectrumArgs),
    /// Expected copy number or failure probability over a θ grid.
    Curves(CurvesArgs),
    /// Monte Carlo of the GHZ telecloning protocol.
    Teleclone(TelecloneArgs),
    /// Effect of noisy GHZ states on the protocol.
    Robustness(RobustnessArgs),
    /// Run the invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Strategy such as `2x(1->3),1x(2->5)`.
    pub strategy: String,
    #[arg(long)]
    pub theta: f64,
    /// Declared number of input copies; must equal Σ k·count.
    #[arg(long)]
    pub copies: Option<u32>,
    /// Copy goal K for the failure probability. Defaults to the largest target.
    #[arg(long)]
    pub goal: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    Expectation,
    Failure,
}

#[derive(Debug, Args, Serialize)]
pub struct CurvesArgs {
    #[arg(long, value_enum, default_value_t = CurveMode::Expectation)]
    pub mode: CurveMode,
    /// Repeat for several strategies. Defaults to 10x(1->20), 1x(10->20), 2x(1->3), 1x(2->3).
    #[arg(long = "strategy")]
    pub strategies: Vec<String>,
    /// `LO:HI:POINTS`, giving POINTS uniform angles in (LO, HI].
    #[arg(long)]
    pub grid: Option<String>,
    /// Copy goal for failure curves. Defaults to each strategy's largest target.
    #[arg(long)]
    pub goal: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SecretSign {
    Plus,
    Minus,
}

#[derive(Debug, Args, Serialize)]
pub struct TelecloneArgs {
    /// Input copies M.
    #[arg(short = 'm', long)]
    pub copies: u32,
    /// Target copies N (at most 6).
    #[arg(short = 'n', long)]
    pub targets: u32,
    #[arg(long)]
    pub theta: f64,
    /// `ideal` or `ghz`.
    #[arg(long, default_value = "ideal")]
    pub prep: PrepMode,
    /// `full` or `interferometric`.
    #[arg(long, default_value = "full")]
    pub detector: BellDetector,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Which of the two states is fed in; only the verifier sees it.
    #[arg(long, value_enum, default_value_t = SecretSign::Plus)]
    pub sign: SecretSign,
}

#[derive(Debug, Args, Serialize)]
pub struct RobustnessArgs {
    /// `depolarizing` or `dephasing`.
    #[arg(long, default_value = "depolarizing")]
    pub noise: NoiseKind,
    /// Comma-separated noise strengths in [0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.05,0.1,0.2,0.5,1")]
    pub epsilon: Vec<f64>,
    #[arg(short = 'm', long, default_value_t = 1)]
    pub copies: u32,
    #[arg(short = 'n', long, default_value_t = 2)]
    pub targets: u32,
    #[arg(long)]
    pub theta: f64,
    /// Monte Carlo trials per ε; 0 skips sampling.
    #[arg(long, default_value_t = 2_000)]
    pub trials: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Only run checks whose id contains this text.
    pub filter: Option<String>,
    /// Break a construction on purpose (`omega-sign`, `control-on-zero`).
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Spectrum(args) => commands::spectrum(common, args),
        Command::Curves(args) => commands::curves(common, args),
        Command::Teleclone(args) => commands::teleclone(common, args),
        Command::Robustness(args) => commands::robustness(common, args),
        Command::Verify(args) => commands::verify(common, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
