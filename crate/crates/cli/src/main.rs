//! `horton`: experiments on Horton pruning of Galton-Watson trees.
//!
//! Exit status: 0 success, 2 usage, 3 numerical or truncation failure,
//! 4 conditioning failure. `converge` additionally returns 5 when the
//! trajectory collapses to a point mass and 6 when it runs out of budget.

mod commands;
mod law;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes, one per exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Conditioning(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
            Failure::Conditioning(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Conditioning(m) => write!(f, "conditioning failure: {m}"),
            Failure::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl From<horton::Error> for Failure {
    fn from(e: horton::Error) -> Self {
        use horton::Error as E;
        let msg = e.to_string();
        match e {
            E::Domain { .. } | E::InvalidDistribution(_) | E::MalformedTree(_) | E::EmptyTree(_) | E::Json(_) => {
                Failure::Usage(msg)
            }
            E::Conditioning(_) => Failure::Conditioning(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "horton", version, about = "Horton pruning, invariant Galton-Watson laws and Tokunaga statistics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Global {
    /// Output directory.
    #[arg(long, global = true, env = "HORTON_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sampling (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON object of option defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// IGW(q0) coefficients, constants and Tokunaga table, or a sweep over q0.
    Igw(commands::IgwArgs),
    /// Iterated pruning of a law toward its attractor.
    Converge(commands::ConvergeArgs),
    /// Monte Carlo Tokunaga estimates from order-conditioned trees.
    Mc(commands::McArgs),
    /// The oscillating prune-invariant law and its regularity probe.
    Oscillatory(commands::OscillatoryArgs),
    /// Exact enumeration of order-conditioned expectations.
    Enumerate(commands::EnumerateArgs),
    /// Horton pruning of a tree file.
    PruneTree(commands::PruneTreeArgs),
    /// Order and branch statistics of a tree file.
    Order(commands::OrderArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("horton: {f}");
            ExitCode::from(f.code())
        }
    }
}
