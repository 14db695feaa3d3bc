//! `esnlab` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "esnlab", version, about = "Echo state network experiments around the edge of chaos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file (network subcommands also accept a network JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores. Outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Format of tabular results.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SubstrateArgs {
    /// Number of neurons.
    #[arg(long, default_value_t = 151)]
    pub n: usize,
    /// Rotation in radians; drawn from the seed when omitted.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Also build a locally connected reservoir with this maximum length.
    #[arg(long)]
    pub max_length: Option<f64>,
    /// Weight variance of that reservoir.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Random reservoirs over a grid of weight variances.
    Sweep(Common),
    /// HyperNEAT evolution of reservoirs on the spiral substrate.
    Evolve(Common),
    /// Task scores, lambda and optionally AIS/TE of one network.
    Eval(Common),
    /// Lyapunov exponent of one network.
    Lyapunov(Common),
    /// Active information storage and transfer entropy of one network.
    Info(Common),
    /// Paired statistical comparison of two networks.
    Compare(Common),
    /// Spiral substrate coordinates.
    Substrate(SubstrateArgs),
    /// Print the version.
    Version,
}

fn init_threads(threads: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Version => {
            println!("esnlab {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::Substrate(args) => {
            let threads = init_threads(args.threads)?;
            commands::substrate(&args, threads)
        }
        Command::Sweep(c) => with_threads(&c, commands::sweep),
        Command::Evolve(c) => with_threads(&c, commands::evolve),
        Command::Eval(c) => with_threads(&c, commands::eval),
        Command::Lyapunov(c) => with_threads(&c, commands::lyapunov),
        Command::Info(c) => with_threads(&c, commands::info),
        Command::Compare(c) => with_threads(&c, commands::compare),
    }
}

fn with_threads(c: &Common, f: fn(&Common, usize) -> Result<(), CliError>) -> Result<(), CliError> {
    let threads = init_threads(c.threads)?;
    f(c, threads)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("esnlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
