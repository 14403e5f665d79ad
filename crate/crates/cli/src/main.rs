//! Command-line front end: instance ingestion, run configuration, solver
//! and diagnostic invocation, report emission.
//!
//! Exit codes: 0 ok, 2 bad input, 3 divergence, 4 lemma violation, 5
//! enumeration cap exceeded.

mod commands;
mod config;
mod error;
mod io;

use clap::{Parser, Subcommand};

use commands::Kind;
use config::CommonOpts;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "spikesolve",
    version,
    about = "Spiking-network solvers for non-negative least squares and \
             minimum-l1 interpolation, with structural diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a network until its firing rates approximate the optimum.
    Solve {
        #[arg(value_enum)]
        kind: Kind,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run with full diagnostics and check the structural guarantees.
    Verify {
        #[command(flatten)]
        opts: CommonOpts,
        /// Tolerance the checks are held to.
        #[arg(long, default_value_t = 1e-6)]
        check_tolerance: f64,
    },
    /// Conditioning report for a wall arrangement.
    Gamma {
        #[command(flatten)]
        opts: CommonOpts,
        /// Fail instead of falling back to sampling when the enumeration
        /// caps are exceeded.
        #[arg(long)]
        exact: bool,
        /// Subset draws when sampling.
        #[arg(long)]
        trials: Option<usize>,
        /// Also run the greedy bucketed-projection probe at this shrink
        /// factor.
        #[arg(long)]
        probe_tau: Option<f64>,
    },
    /// Batch convergence study: one eps curve per instance plus a summary.
    Bench {
        #[arg(value_enum)]
        kind: Kind,
        #[command(flatten)]
        opts: CommonOpts,
        /// Number of generated instances (seeds count up from --seed).
        #[arg(long)]
        count: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { kind, opts } => commands::cmd_solve(kind, &config::merge(&opts)?),
        Command::Verify {
            opts,
            check_tolerance,
        } => commands::cmd_verify(&config::merge(&opts)?, check_tolerance),
        Command::Gamma {
            opts,
            exact,
            trials,
            probe_tau,
        } => commands::cmd_gamma(&config::merge(&opts)?, exact, trials, probe_tau),
        Command::Bench { kind, opts, count } => {
            commands::cmd_bench(kind, &config::merge(&opts)?, count)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
