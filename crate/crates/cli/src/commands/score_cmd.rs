use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;

use reoptbench::harness::record::load_run;
use reoptbench::score::{
    batch_report, build_rank_table, final_score, instance_score, write_scores_csv,
    write_summary_csv, BatchReport, ScoreRecord,
};

use super::{io_error, CliError};

#[derive(Args)]
pub struct ScoreArgs {
    /// Run record, optionally prefixed with a team name: `team=path`.
    /// Repeat for multiple teams and series; the team defaults to the file
    /// stem. One record covers one (team, series) pair.
    #[arg(long, required = true)]
    record: Vec<String>,
    /// Output directory for scores.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: ScoreArgs) -> Result<(), CliError> {
    // team -> series name -> scored records (+ validity)
    let mut teams: BTreeMap<String, BTreeMap<String, Vec<(ScoreRecord, bool)>>> = BTreeMap::new();
    let mut instance_count: Option<usize> = None;
    for spec in &args.record {
        let (team, path) = match spec.split_once('=') {
            Some((team, path)) => (team.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                let team = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "team".into());
                (team, path)
            }
        };
        if team.contains(',') {
            return Err(CliError::Usage(format!("team name {team:?} must not contain commas")));
        }
        let record = load_run(&path).map_err(|e| CliError::Domain(e.to_string()))?;
        let n = record.outcomes.len();
        match instance_count {
            None => instance_count = Some(n),
            Some(existing) if existing != n => {
                return Err(CliError::Domain(format!(
                    "record {} has {n} instances, others have {existing}",
                    path.display()
                )))
            }
            _ => {}
        }
        let missing: Vec<u32> = (1..=n as u32)
            .filter(|i| !record.outcomes.iter().any(|o| o.index == *i))
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Domain(format!(
                "record {} is missing instances {missing:?}",
                path.display()
            )));
        }
        let entry = teams
            .entry(team)
            .or_default()
            .entry(record.meta.series_name.clone())
            .or_default();
        if !entry.is_empty() {
            return Err(CliError::Domain(format!(
                "duplicate record for series {:?}",
                record.meta.series_name
            )));
        }
        for outcome in &record.outcomes {
            // The series index is assigned after all records are read.
            entry.push((instance_score(0, outcome.index, &outcome.outcome), outcome.valid));
        }
    }
    let instance_count = instance_count.expect("at least one record") as u32;

    // Deterministic series indices: sorted by series name.
    let mut series_names: Vec<String> =
        teams.values().flat_map(|by_series| by_series.keys().cloned()).collect();
    series_names.sort();
    series_names.dedup();
    let series_index: BTreeMap<&str, u32> = series_names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i as u32 + 1))
        .collect();

    let mut per_team: BTreeMap<String, BTreeMap<(u32, u32), (f64, bool)>> = BTreeMap::new();
    let mut records_by_team: BTreeMap<String, Vec<ScoreRecord>> = BTreeMap::new();
    let mut batch_rows: Vec<(String, u32, BatchReport)> = Vec::new();
    for (team, by_series) in &teams {
        for name in &series_names {
            let Some(scored) = by_series.get(name) else {
                return Err(CliError::Domain(format!(
                    "team {team:?} has no record for series {name:?}"
                )));
            };
            let s = series_index[name.as_str()];
            for (rec, valid) in scored {
                let rec = ScoreRecord { series: s, ..rec.clone() };
                per_team
                    .entry(team.clone())
                    .or_default()
                    .insert((s, rec.instance), (rec.f, *valid));
                records_by_team.entry(team.clone()).or_default().push(rec);
            }
            if instance_count == reoptbench::score::SERIES_LENGTH {
                let series_records: Vec<ScoreRecord> = records_by_team[team]
                    .iter()
                    .filter(|r| r.series == s)
                    .cloned()
                    .collect();
                batch_rows.push((team.clone(), s, batch_report(&series_records)?));
            }
        }
    }

    let table = build_rank_table(&per_team, instance_count)?;
    let finals = final_score(&table)?;

    std::fs::create_dir_all(&args.out).map_err(|e| io_error("creating output dir", e))?;
    let scores_path = args.out.join("scores.csv");
    let mut scores_file =
        std::fs::File::create(&scores_path).map_err(|e| io_error("scores.csv", e))?;
    write_scores_csv(&mut scores_file, &table, &records_by_team)
        .map_err(|e| io_error("scores.csv", e))?;

    let summary_path = args.out.join("summary.csv");
    let mut summary_file =
        std::fs::File::create(&summary_path).map_err(|e| io_error("summary.csv", e))?;
    write_summary_csv(&mut summary_file, &batch_rows, &finals)
        .map_err(|e| io_error("summary.csv", e))?;

    println!("wrote {} and {}", scores_path.display(), summary_path.display());
    println!("final scores (lower is better):");
    for (team, c) in &finals {
        println!("  {team}: {c}");
    }
    Ok(())
}
