//! `twochoice` command-line front end.

mod bench;
mod error;
mod gen;
mod input;
mod pipeline;
mod run;
mod smallbias;
mod verify;

use std::fmt;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use twochoice_core::rounding::Engine;

use crate::error::{CliError, CliResult};

/// Rounding engine, or `none` for the fractional pass only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineArg {
    None,
    Some(Engine),
}

impl EngineArg {
    pub fn engine(self) -> Option<Engine> {
        match self {
            EngineArg::None => None,
            EngineArg::Some(e) => Some(e),
        }
    }
}

impl FromStr for EngineArg {
    type Err = twochoice_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(EngineArg::None),
            other => other.parse().map(EngineArg::Some),
        }
    }
}

impl fmt::Display for EngineArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineArg::None => f.write_str("none"),
            EngineArg::Some(e) => e.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "twochoice", version, about)]
struct Cli {
    /// Worker threads for Monte Carlo trials; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fractional pass, optional rounding and a report.
    Run(run::RunArgs),
    /// Invariant sweeps, marginal checks and the counterexample demos.
    Verify(verify::VerifyArgs),
    /// Benchmark table over instance families.
    Bench(bench::BenchArgs),
    /// Write a generated instance in OBMI format.
    Gen(gen::GenArgs),
    /// Inspect and check the small-bias seed space.
    Smallbias(smallbias::SmallBiasArgs),
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Verify(a) => verify::cmd_verify(a),
        Command::Bench(a) => bench::cmd_bench(a),
        Command::Gen(a) => gen::cmd_gen(a),
        Command::Smallbias(a) => smallbias::cmd_smallbias(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TWOCHOICE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
