use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subwigner::cli::{self, VerifyArgs};

#[derive(Parser)]
#[command(name = "subwigner", version, about = "Covariance theory and Monte Carlo validation for linear eigenvalue statistics of overlapping Wigner submatrices")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the limiting covariance matrix with its per-entry breakdown.
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the replicated experiment and compare with theory. Exits
    /// nonzero when any |z| exceeds the configured gate.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (overrides config and SUBWIGNER_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the oracle identity suite; nonzero exit on any mismatch.
    Verify {
        /// Cap on polynomial degrees exercised by the suite.
        #[arg(long, default_value_t = 6)]
        max_degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Self-test: flip one sign and require the suite to catch it.
        #[arg(long, hide = true)]
        inject_sign_flip: bool,
    },
    /// Pretty-print a simulation directory.
    Report {
        #[arg(long = "in")]
        in_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = match args.command {
        Command::Theory { config, out } => cli::cmd_theory(&config, &out).map(|()| true),
        Command::Simulate {
            config,
            out,
            threads,
            seed,
        } => cli::cmd_simulate(&config, &out, threads, seed),
        Command::Verify {
            max_degree,
            out,
            inject_sign_flip,
        } => cli::cmd_verify(
            &VerifyArgs {
                max_degree,
                inject_sign_flip,
            },
            out.as_deref(),
        ),
        Command::Report { in_dir } => cli::cmd_report(&in_dir).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
