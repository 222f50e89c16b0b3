//! `thinlap`: declarative experiment runner for the thinlap library.
//!
//! Exit codes: 0 all assertions passed, 1 configuration or input error,
//! 2 assertion failure, 3 numerical failure. With several configs the most
//! severe outcome wins (1 over 3 over 2).

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::Kind;
use output::{Outcome, RunError};

#[derive(Parser, Debug)]
#[command(name = "thinlap", version, about = "Numerical experiments for elliptic equations degenerating on thin manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of exponents and constants over a range of (a, n).
    Exponents(RunArgs),
    /// Reduced (and optionally full-grid) solves with convergence tables.
    Solve(RunArgs),
    /// Extension, Dirichlet-to-Neumann and energy-identity checks.
    ExtensionCheck(RunArgs),
    /// Boundary Harnack ratio pipeline.
    Harnack(RunArgs),
    /// Radial capacity sweeps.
    Capacity(RunArgs),
    /// Aggregates every verdict.json below a directory.
    Report(ReportArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment config file (TOML); may be repeated.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; each experiment writes to `<out>/<name>/`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    /// Directory to scan; report.json and summary.txt are written here.
    #[arg(long)]
    out: PathBuf,
    /// Accepted for symmetry with the other commands; ignored.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
}

fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("THINLAP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("THINLAP_THREADS must be a positive integer, got {v:?}"))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| e.to_string())
}

fn run_all(kind: Kind, args: &RunArgs) -> u8 {
    let results: Vec<(PathBuf, Result<Outcome, RunError>)> = args
        .configs
        .par_iter()
        .map(|path| (path.clone(), commands::run(kind, path, &args.out)))
        .collect();
    let mut code = 0u8;
    for (path, result) in results {
        let this = match result {
            Ok(outcome) => {
                println!("{} {}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.name, outcome.summary);
                if outcome.passed { 0 } else { 2 }
            }
            Err(err) => {
                eprintln!("{}: {err}", path.display());
                err.exit_code()
            }
        };
        code = severest(code, this);
    }
    code
}

fn severest(a: u8, b: u8) -> u8 {
    let rank = |c: u8| match c {
        1 => 3,
        3 => 2,
        2 => 1,
        _ => 0,
    };
    if rank(b) > rank(a) { b } else { a }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    let code = pool.install(|| match &cli.command {
        Command::Exponents(args) => run_all(Kind::Exponents, args),
        Command::Solve(args) => run_all(Kind::Solve, args),
        Command::ExtensionCheck(args) => run_all(Kind::ExtensionCheck, args),
        Command::Harnack(args) => run_all(Kind::Harnack, args),
        Command::Capacity(args) => run_all(Kind::Capacity, args),
        Command::Report(args) => match commands::report::run(&args.out) {
            Ok(code) => code,
            Err(err) => {
                eprintln!("{err}");
                err.exit_code()
            }
        },
    });
    ExitCode::from(code)
}
