//! `eumax`: batch front end for the expected-utility solvers.
//!
//! Machine-readable output (JSON, or CSV for `bench`) goes to standard output;
//! `--format table` writes a human summary to standard error instead.

mod bench;
mod commands;
mod instance;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eumax::Error;

use crate::instance::Params;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED_CHECK: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Debug, Clone)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INVALID, message: message.into() }
    }

    pub fn context(self, what: &str) -> Self {
        CliError { code: self.code, message: format!("{what}: {}", self.message) }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::InvalidDistribution(_) | Error::MomentDiverges(_) => {
                EXIT_INVALID
            }
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::TermBudgetExceeded { .. }
            | Error::WindowNotConverged { .. }
            | Error::StateBudgetExceeded { .. }
            | Error::TooManyTrees { .. }
            | Error::TooManySolutions { .. }
            | Error::SupportExplosion { .. }
            | Error::EncodingOverflow => EXIT_BUDGET,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "eumax",
    version,
    about = "Expected-utility maximization over stochastic combinatorial problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Additive error budget, in (0, 1).
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Cap on exponential-sum terms.
    #[arg(long, global = true)]
    max_terms: Option<usize>,
    /// Coarsening factor (at least 1) for the configuration rounding.
    #[arg(long, global = true)]
    rounding_scale: Option<f64>,
    /// Maximum number of edges on a walk.
    #[arg(long, global = true)]
    hop_cap: Option<usize>,
    /// Cap on dynamic-programming states.
    #[arg(long, global = true)]
    state_budget: Option<usize>,
    /// Seed for Monte Carlo oracles and generated instances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Include wall-clock times, which makes output differ between runs.
    #[arg(long, global = true)]
    timing: bool,
}

impl Global {
    pub fn params(&self) -> Params {
        Params {
            eps: self.eps,
            max_terms: self.max_terms,
            rounding_scale: self.rounding_scale,
            hop_cap: self.hop_cap,
            state_budget: self.state_budget,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Approximate a utility by an exponential sum.
    Decompose {
        /// `ramp:DELTA[:THRESHOLD]`, `inverse`, `zero`, or a JSON utility object.
        #[arg(long)]
        utility: String,
    },
    /// Solve an instance file.
    Solve { instance: PathBuf },
    /// Exhaustively evaluate every feasible solution of a small instance.
    Oracle { instance: PathBuf },
    /// Solve, run the oracle, and check the additive gap against the error budget.
    Verify { instance: PathBuf },
    /// CSV sweep over random covering knapsacks.
    Bench {
        /// Comma-separated item counts; empty for no rows.
        #[arg(long, default_value = "4,6,8")]
        sizes: String,
        /// Instances per size.
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Decompose { utility } => commands::decompose(utility, g),
        Command::Solve { instance } => commands::solve(instance, g),
        Command::Oracle { instance } => commands::oracle(instance, g),
        Command::Verify { instance } => commands::verify(instance, g),
        Command::Bench { sizes, reps } => bench::run(sizes, *reps, g),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
