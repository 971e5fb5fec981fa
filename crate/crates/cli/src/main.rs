//! `coop-ucb`: drive the cooperative bandit simulator from the terminal.
//!
//! Three subcommands: `analyze-graph` prints a graph's spectral profile,
//! `simulate` runs a seeded experiment recipe into plot-ready CSVs, and
//! `bounds` prints the group-pull bound table next to the fusion-center
//! benchmark. Exit codes: 0 success, 1 usage/validation error, 2 runtime
//! invariant failure inside the simulator.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "coop-ucb", version, about = "Cooperative bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print spectral measures of a communication graph as CSV
    AnalyzeGraph {
        /// Edge-list file: one "a b" edge per line, 1-based ids; a line with
        /// a single id declares an isolated node
        #[arg(long)]
        edges: PathBuf,
        /// Consensus scale; default d_max/(d_max − 1)
        #[arg(long)]
        kappa: Option<f64>,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment recipe and write CSV results
    Simulate {
        /// Recipe file (strict key-value format; see the repository README)
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to $COOP_UCB_OUT_DIR, then "."
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for the Monte Carlo ensemble (default: all cores;
        /// results are identical for any value)
        #[arg(long)]
        threads: Option<usize>,
        /// Override the recipe's run count (e.g. for a quick look)
        #[arg(long)]
        runs: Option<u32>,
    },
    /// Print the group-pull bound table for a recipe's model and graph
    Bounds {
        /// Recipe file; needs a fixed (edge-list) graph
        #[arg(long)]
        config: PathBuf,
        /// A pulls.csv from `simulate` to list empirical group pulls
        /// alongside the bounds
        #[arg(long)]
        empirical: Option<PathBuf>,
    },
}

/// What went wrong, split by exit code: usage errors (1) versus violated
/// runtime invariants inside the simulator (2).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Defect(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Defect(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) | Failure::Defect(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<coop_ucb::Error> for Failure {
    fn from(e: coop_ucb::Error) -> Self {
        if e.is_defect() {
            Failure::Defect(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    // Sequential build: the flag is accepted for interface stability but the
    // ensemble runs on one thread regardless (same results either way).
    match threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::AnalyzeGraph { edges, kappa, out } => {
            commands::analyze_graph(&edges, kappa, out.as_deref())
        }
        Command::Simulate {
            config,
            out_dir,
            threads,
            runs,
        } => {
            configure_threads(threads)?;
            commands::simulate(&config, out_dir, runs)
        }
        Command::Bounds { config, empirical } => {
            commands::bounds(&config, empirical.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses exit code 2 for usage errors; this tool reserves 2
            // for runtime invariant failures, so remap here.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
