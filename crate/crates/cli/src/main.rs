use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

/// Weak-coupling eigenvalue experiments for critical p-Laplace operators.
#[derive(Parser)]
#[command(name = "pcrit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for independent solves.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add a timestamp line to provenance headers.
    #[arg(long)]
    timestamps: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the critical potential V.
    MakePotential(Common),
    /// Solve at one coupling (`--alpha`) or independently at every sweep coupling.
    GroundState {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Warm-started sweep over the configured couplings, then fit.
    Sweep(Common),
    /// Refit an existing results.csv.
    Fit(Common),
    /// Supersolution, capacity, incomplete gamma and upper-bound checks.
    VerifyBounds(Common),
    /// Truncated eigenvalue at zero coupling on growing balls and the sign of the W integral.
    CriticalityCheck(Common),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Usage(String),
    Io(String),
    Solver(String),
    ChecksFailed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::ChecksFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::ChecksFailed(m) => write!(f, "checks failed: {m}"),
        }
    }
}

fn context(c: &Common) -> Result<commands::Context, CliError> {
    commands::Context::new(&c.config, c.jobs, c.seed, c.out.clone(), c.timestamps)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::MakePotential(c) => commands::make_potential(&context(&c)?),
        Command::GroundState { common, alpha } => commands::ground_state(&context(&common)?, alpha),
        Command::Sweep(c) => commands::sweep(&context(&c)?),
        Command::Fit(c) => commands::fit(&context(&c)?),
        Command::VerifyBounds(c) => commands::verify_bounds(&context(&c)?),
        Command::CriticalityCheck(c) => commands::criticality_check(&context(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcrit: {e}");
            ExitCode::from(e.code())
        }
    }
}
