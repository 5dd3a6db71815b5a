use std::path::PathBuf;

use clap::Args;

use reoptbench::harness::events::validate_event_log;
use reoptbench::harness::record::load_run;
use reoptbench::model::FeasTolerances;
use reoptbench::mps::{self, MpsDialect};
use reoptbench::simgen;
use reoptbench::solfile;

use super::CliError;

#[derive(Args)]
pub struct CheckArgs {
    /// Instance to check a solution against
    #[arg(long, requires = "solution", conflicts_with = "record")]
    instance: Option<PathBuf>,
    /// Solution file (`<variable> <value>` per line)
    #[arg(long, requires = "instance")]
    solution: Option<PathBuf>,
    /// Run record to validate instead of a solution
    #[arg(long)]
    record: Option<PathBuf>,
    /// Manifest for the record's instance count (defaults to the path
    /// stored in the record)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Row violation tolerance (scaled by 1 + |side|)
    #[arg(long, default_value_t = 1e-6)]
    row_tol: f64,
    /// Bound violation tolerance (scaled by 1 + |bound|)
    #[arg(long, default_value_t = 1e-6)]
    bound_tol: f64,
    /// Integrality tolerance (absolute)
    #[arg(long, default_value_t = 1e-5)]
    int_tol: f64,
}

pub fn run(args: CheckArgs) -> Result<(), CliError> {
    match (&args.instance, &args.record) {
        (Some(instance), None) => check_solution(&args, instance),
        (None, Some(record)) => check_record(&args, record),
        _ => Err(CliError::Usage(
            "pass either --instance with --solution, or --record".into(),
        )),
    }
}

fn check_solution(args: &CheckArgs, instance_path: &PathBuf) -> Result<(), CliError> {
    let instance = mps::parse_mps_file(instance_path, &MpsDialect::default())?.instance;
    let solution_path = args.solution.as_ref().expect("clap enforces the pairing");
    let solution = solfile::read_solution(solution_path, &instance)
        .map_err(CliError::Domain)?;
    let tolerances = FeasTolerances {
        row: args.row_tol,
        bound: args.bound_tol,
        integrality: args.int_tol,
    };
    let report = instance
        .check_feasibility(&solution, &tolerances)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let objective = instance
        .objective_value(&solution)
        .map_err(|e| CliError::Domain(e.to_string()))?;

    println!("feasible: {}", report.feasible);
    println!("objective: {objective}");
    println!("max_bound_violation: {}", report.max_bound_violation);
    println!("max_row_violation: {}", report.max_row_violation);
    println!("max_integrality_violation: {}", report.max_integrality_violation);
    if let Some(w) = &report.worst_offender {
        println!("worst_offender: {w}");
    }
    if report.feasible {
        Ok(())
    } else {
        Err(CliError::Domain("solution is infeasible".into()))
    }
}

fn check_record(args: &CheckArgs, record_path: &PathBuf) -> Result<(), CliError> {
    let record = load_run(record_path).map_err(|e| CliError::Domain(e.to_string()))?;
    let instance_count = match &args.manifest {
        Some(path) => simgen::load_manifest(path)?.len(),
        None => {
            let stored = PathBuf::from(&record.meta.manifest_path);
            match simgen::load_manifest(&stored) {
                Ok(m) => m.len(),
                Err(_) => record.outcomes.len(),
            }
        }
    };
    let violations = validate_event_log(&record.events_only(), instance_count as u32);
    let mut all = record.protocol_violations.clone();
    for v in violations {
        if !all.contains(&v) {
            all.push(v);
        }
    }
    if all.is_empty() {
        println!("record is clean: {} events, {} outcomes", record.events.len(), record.outcomes.len());
        Ok(())
    } else {
        for v in &all {
            println!("violation: {v}");
        }
        Err(CliError::Domain(format!("{} violations", all.len())))
    }
}
