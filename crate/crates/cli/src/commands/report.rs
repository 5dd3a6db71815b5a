use std::path::PathBuf;

use clap::Args;

use reoptbench::harness::record::load_run;
use reoptbench::score::{batch_report, instance_score, ScoreRecord};

use super::CliError;

#[derive(Args)]
pub struct ReportArgs {
    /// Run record to report on (one team, one full 50-instance series)
    #[arg(long)]
    record: PathBuf,
}

pub fn run(args: ReportArgs) -> Result<(), CliError> {
    let record = load_run(&args.record).map_err(|e| CliError::Domain(e.to_string()))?;
    let scored: Vec<ScoreRecord> = record
        .outcomes
        .iter()
        .map(|o| instance_score(1, o.index, &o.outcome))
        .collect();
    let report = batch_report(&scored)?;

    println!("series: {}", record.meta.series_name);
    println!("solver: {}", record.meta.solver_command.join(" "));
    println!();
    println!("{:<10} {:>10} {:>10} {:>10} {:>10}", "batch", "reltime", "gap", "nofeas", "f");
    let mut rows: Vec<_> = report.batches.iter().collect();
    rows.push(&report.overall);
    for b in rows {
        let label = if b.first == 1 && b.last == reoptbench::score::SERIES_LENGTH {
            "overall".to_string()
        } else {
            format!("{}-{}", b.first, b.last)
        };
        println!(
            "{label:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            b.reltime,
            b.gap,
            b.nofeas,
            b.reltime + b.gap + b.nofeas
        );
    }
    if !record.protocol_violations.is_empty() {
        println!();
        println!("{} protocol violations recorded in this run", record.protocol_violations.len());
    }
    Ok(())
}
