//! `reoptbench` — benchmark toolkit for MILP reoptimization.
//!
//! Subcommands: `generate` builds a 50-instance series by perturbation,
//! `run` drives a solver over a series under the sequential protocol,
//! `check` validates solutions or run records, `score` turns run records
//! into CSV score/rank reports, `report` prints batch means for one record,
//! and `solve` is the built-in solver (ad-hoc on one instance, or serving
//! the harness protocol for a whole series).
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error (recipe, protocol
//! or scoring), 3 I/O error.

mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{check, generate, report, run, score_cmd, solve};

#[derive(Parser)]
#[command(name = "reoptbench", version, about = "MILP reoptimization benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance series by controlled perturbation
    Generate(generate::GenerateArgs),
    /// Run a solver over a series under the sequential protocol
    Run(run::RunArgs),
    /// Check a solution against an instance, or validate a run record
    Check(check::CheckArgs),
    /// Score run records: per-instance CSV, batch means, ranks and final C
    Score(score_cmd::ScoreArgs),
    /// Print the batch-mean report for one run record
    Report(report::ReportArgs),
    /// Solve one instance with the built-in solver, or serve a series
    /// over the harness protocol
    Solve(solve::SolveArgs),
}

fn main() {
    std::process::exit(run_cli());
}

fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses exit code 2 for usage errors; the documented
            // contract reserves 1 for those and 2 for domain errors.
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                0
            } else {
                1
            };
        }
    };
    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Run(args) => run::run(args),
        Command::Check(args) => check::run(args),
        Command::Score(args) => score_cmd::run(args),
        Command::Report(args) => report::run(args),
        Command::Solve(args) => solve::run(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("reoptbench: {e}");
            e.exit_code()
        }
    }
}
