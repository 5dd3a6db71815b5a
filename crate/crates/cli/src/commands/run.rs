use std::path::PathBuf;

use clap::Args;

use reoptbench::harness::record::{persist_run, RunLimits};
use reoptbench::harness::run_series;
use reoptbench::simgen;

use super::{io_error, CliError};

#[derive(Args)]
pub struct RunArgs {
    /// Solver command; whitespace-separated, invoked as
    /// `<command...> --manifest <path>`
    #[arg(long)]
    solver: String,
    /// Series manifest (manifest.json)
    #[arg(long)]
    manifest: PathBuf,
    /// Output run record (line-delimited JSON)
    #[arg(long)]
    out: PathBuf,
    /// Override the manifest's per-instance time limit (seconds)
    #[arg(long)]
    time_limit: Option<f64>,
    /// Series budget in seconds; defaults to instances x per-instance limit
    #[arg(long)]
    total_budget: Option<f64>,
    /// Memory limit for the solver process in GiB
    #[arg(long, default_value_t = 16.0)]
    memory_limit_gb: f64,
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let command: Vec<String> = args.solver.split_whitespace().map(String::from).collect();
    if command.is_empty() {
        return Err(CliError::Usage("--solver is empty".into()));
    }
    let manifest = simgen::load_manifest(&args.manifest)?;
    let per_instance = args.time_limit.unwrap_or(manifest.time_limit_seconds);
    let limits = RunLimits {
        per_instance_time_limit_seconds: per_instance,
        total_budget_seconds: args
            .total_budget
            .unwrap_or(per_instance * manifest.len() as f64),
        memory_limit_bytes: (args.memory_limit_gb * (1u64 << 30) as f64) as u64,
        thread_limit: 1,
    };

    let record = run_series(&command, &args.manifest, &limits)?;
    persist_run(&record, &args.out).map_err(|e| io_error("writing record", e))?;

    let solved = record
        .outcomes
        .iter()
        .filter(|o| o.outcome.solved_to_optimality)
        .count();
    println!(
        "{}: {} instances, {} solved to optimality, {} protocol violations -> {}",
        record.meta.series_name,
        record.outcomes.len(),
        solved,
        record.protocol_violations.len(),
        args.out.display()
    );
    for v in &record.protocol_violations {
        eprintln!("violation: {v}");
    }
    if record.protocol_violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "{} protocol violations recorded",
            record.protocol_violations.len()
        )))
    }
}
