//! Scoring, ranking and aggregation.
//!
//! The per-instance score is `f = reltime + gap + nofeas`, which separates
//! the three outcome tiers: instances solved to optimality within the limit
//! score in `[0, 1]`, timeouts with an incumbent in `(1, 2]`, and timeouts
//! without any feasible solution score exactly 3. Teams are ranked per
//! instance by ascending `f` under standard competition ranking (ties share
//! a rank, the next distinct score ranks past them); an invalid result —
//! infeasible claimed solution or an impossible dual bound — gets twice the
//! worst possible rank. The final score weights later instances more:
//! `C = sum over (s, i) of (1 + 0.1 i) * r(s, i)`, lower is better.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::serde_util::opt_extreal;

/// A claimed optimal outcome whose own bounds leave a gap above this is
/// downgraded to unsolved.
pub const OPTIMALITY_GAP_TOLERANCE: f64 = 1e-6;
/// Slack allowed before a dual bound crossing the primal bound marks the
/// result invalid (minimization: `db > pb + tol`).
pub const DUAL_BOUND_TOLERANCE: f64 = 1e-6;

/// What a solver reported for one instance.
///
/// Bounds are extended reals; `None` means no bound was reported at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub time_spent_seconds: f64,
    pub time_limit_seconds: f64,
    pub solved_to_optimality: bool,
    #[serde(with = "opt_extreal")]
    pub primal_bound: Option<f64>,
    #[serde(with = "opt_extreal")]
    pub dual_bound: Option<f64>,
    pub has_feasible_solution: bool,
    pub stopped_early_without_zero_gap: bool,
}

impl SolveOutcome {
    /// Contract checks: optimality implies a feasible solution, and a missing
    /// primal bound implies no feasible solution.
    pub fn validate(&self) -> Result<(), String> {
        if self.solved_to_optimality && !self.has_feasible_solution {
            return Err("solved_to_optimality requires a feasible solution".into());
        }
        if self.primal_bound.is_none() && self.has_feasible_solution {
            return Err("a feasible solution requires a primal bound".into());
        }
        if !(self.time_limit_seconds > 0.0) {
            return Err(format!("time limit {} must be positive", self.time_limit_seconds));
        }
        if !(self.time_spent_seconds >= 0.0) {
            return Err(format!("time spent {} must be nonnegative", self.time_spent_seconds));
        }
        Ok(())
    }
}

/// Score components for one (series, instance) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub series: u32,
    pub instance: u32,
    pub reltime: f64,
    pub gap: f64,
    pub nofeas: u8,
    pub f: f64,
}

/// Relative solve time.
///
/// Solved instances score `time / limit` (which exceeds 1 if the limit was
/// violated); unsolved ones are clamped below at 1, and a run that stopped
/// early without closing the gap scores exactly 1.
pub fn reltime(outcome: &SolveOutcome) -> f64 {
    let ratio = outcome.time_spent_seconds / outcome.time_limit_seconds;
    if outcome.solved_to_optimality {
        ratio
    } else if outcome.stopped_early_without_zero_gap {
        1.0
    } else {
        ratio.max(1.0)
    }
}

/// Normalized primal-dual gap.
///
/// `0` when both bounds are 0; `1` when either bound is missing or infinite
/// or the bounds disagree in sign; otherwise `|pb - db| / max(|pb|, |db|)`.
pub fn gap(pb: Option<f64>, db: Option<f64>) -> f64 {
    match (pb, db) {
        (Some(p), Some(d)) => {
            if p == 0.0 && d == 0.0 {
                0.0
            } else if !p.is_finite() || !d.is_finite() || p * d < 0.0 {
                1.0
            } else {
                (p - d).abs() / p.abs().max(d.abs())
            }
        }
        _ => 1.0,
    }
}

/// Scores one outcome. An asserted optimality whose reported bounds keep a
/// gap above [`OPTIMALITY_GAP_TOLERANCE`] is audited down to unsolved before
/// scoring.
pub fn instance_score(series: u32, instance: u32, outcome: &SolveOutcome) -> ScoreRecord {
    let mut audited = outcome.clone();
    if audited.solved_to_optimality && gap(audited.primal_bound, audited.dual_bound) > OPTIMALITY_GAP_TOLERANCE
    {
        audited.solved_to_optimality = false;
    }
    let reltime = reltime(&audited);
    let gap = if audited.solved_to_optimality {
        0.0
    } else {
        gap(audited.primal_bound, audited.dual_bound)
    };
    let nofeas = u8::from(!audited.has_feasible_solution);
    ScoreRecord { series, instance, reltime, gap, nofeas, f: reltime + gap + f64::from(nofeas) }
}

/// Ranks one instance across teams: valid teams get standard competition
/// ranks by ascending score (ties share, `rank = 1 + #strictly better`),
/// invalid teams get `2 * T` where `T` is the number of teams.
pub fn rank_instance(
    scores: &BTreeMap<String, f64>,
    validity: &BTreeMap<String, bool>,
) -> BTreeMap<String, u32> {
    let team_count = scores.len() as u32;
    let mut ranks = BTreeMap::new();
    for (team, &f) in scores {
        let valid = validity.get(team).copied().unwrap_or(true);
        let rank = if valid {
            let better = scores
                .iter()
                .filter(|(other, &g)| {
                    validity.get(*other).copied().unwrap_or(true) && g < f
                })
                .count() as u32;
            better + 1
        } else {
            2 * team_count
        };
        ranks.insert(team.clone(), rank);
    }
    ranks
}

/// Per-instance ranks and validity for every team, over all series.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub teams: Vec<String>,
    pub instance_count: u32,
    /// `(series, instance)` to per-team cell, teams keyed by name.
    pub cells: BTreeMap<(u32, u32), BTreeMap<String, RankCell>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCell {
    pub f: f64,
    pub valid: bool,
    pub rank: u32,
}

/// Builds the rank table from per-team score/validity maps. Every team must
/// cover exactly the same `(series, instance)` cells.
pub fn build_rank_table(
    per_team: &BTreeMap<String, BTreeMap<(u32, u32), (f64, bool)>>,
    instance_count: u32,
) -> Result<RankTable, ScoreError> {
    let teams: Vec<String> = per_team.keys().cloned().collect();
    if teams.is_empty() {
        return Err(ScoreError::NoTeams);
    }
    let reference: Vec<(u32, u32)> = per_team[&teams[0]].keys().copied().collect();
    for (team, cells) in per_team {
        if cells.len() != reference.len() || !reference.iter().all(|k| cells.contains_key(k)) {
            return Err(ScoreError::MismatchedCoverage { team: team.clone() });
        }
    }
    let mut table = RankTable { teams: teams.clone(), instance_count, cells: BTreeMap::new() };
    for key in reference {
        let mut scores = BTreeMap::new();
        let mut validity = BTreeMap::new();
        for team in &teams {
            let (f, valid) = per_team[team][&key];
            scores.insert(team.clone(), f);
            validity.insert(team.clone(), valid);
        }
        let ranks = rank_instance(&scores, &validity);
        let mut cell = BTreeMap::new();
        for team in &teams {
            cell.insert(
                team.clone(),
                RankCell { f: scores[team], valid: validity[team], rank: ranks[team] },
            );
        }
        table.cells.insert(key, cell);
    }
    Ok(table)
}

/// Weight of instance `i` (1-based) in the final score.
pub fn instance_weight(instance: u32) -> f64 {
    1.0 + 0.1 * f64::from(instance)
}

/// Final score `C` per team. Every series in the table must cover instances
/// `1..=instance_count`.
pub fn final_score(table: &RankTable) -> Result<BTreeMap<String, f64>, ScoreError> {
    let series: std::collections::BTreeSet<u32> =
        table.cells.keys().map(|&(s, _)| s).collect();
    for &s in &series {
        for i in 1..=table.instance_count {
            if !table.cells.contains_key(&(s, i)) {
                return Err(ScoreError::IncompleteTable { series: s, instance: i });
            }
        }
    }
    let mut totals: BTreeMap<String, f64> =
        table.teams.iter().map(|t| (t.clone(), 0.0)).collect();
    for (&(_, i), cell) in &table.cells {
        let weight = instance_weight(i);
        for (team, rc) in cell {
            *totals.get_mut(team).expect("team known") += weight * f64::from(rc.rank);
        }
    }
    Ok(totals)
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("rank table covers no teams")]
    NoTeams,
    #[error("team {team} does not cover the same instances as the others")]
    MismatchedCoverage { team: String },
    #[error("rank table is missing series {series}, instance {instance}")]
    IncompleteTable { series: u32, instance: u32 },
    #[error("series is missing instances {missing:?}")]
    IncompleteSeries { missing: Vec<u32> },
    #[error("batch report expects one series, found {0:?}")]
    MixedSeries(Vec<u32>),
}

/// Means of the score components over all 50 instances and over the five
/// batches 1-10, ..., 41-50.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub overall: BatchMeans,
    pub batches: [BatchMeans; 5],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    /// First and last 1-based instance of the batch (1-50 for the overall row).
    pub first: u32,
    pub last: u32,
    pub reltime: f64,
    pub gap: f64,
    pub nofeas: f64,
}

pub const SERIES_LENGTH: u32 = 50;

/// Aggregates one team's records for one full series of 50 instances.
pub fn batch_report(records: &[ScoreRecord]) -> Result<BatchReport, ScoreError> {
    let series: std::collections::BTreeSet<u32> = records.iter().map(|r| r.series).collect();
    if series.len() > 1 {
        return Err(ScoreError::MixedSeries(series.into_iter().collect()));
    }
    let mut by_instance: BTreeMap<u32, &ScoreRecord> = BTreeMap::new();
    for r in records {
        by_instance.insert(r.instance, r);
    }
    let missing: Vec<u32> =
        (1..=SERIES_LENGTH).filter(|i| !by_instance.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(ScoreError::IncompleteSeries { missing });
    }

    let means = |first: u32, last: u32| -> BatchMeans {
        let slice: Vec<&ScoreRecord> = (first..=last).map(|i| by_instance[&i]).collect();
        BatchMeans {
            first,
            last,
            reltime: accurate_mean(slice.iter().map(|r| r.reltime)),
            gap: accurate_mean(slice.iter().map(|r| r.gap)),
            nofeas: accurate_mean(slice.iter().map(|r| f64::from(r.nofeas))),
        }
    };
    Ok(BatchReport {
        overall: means(1, SERIES_LENGTH),
        batches: [means(1, 10), means(11, 20), means(21, 30), means(31, 40), means(41, 50)],
    })
}

/// Arithmetic mean with one final rounding: the sum is tracked with Neumaier
/// compensation and the division by the count corrects its remainder through
/// a fused multiply-add, so well-scaled inputs yield the exactly rounded
/// mean instead of picking up a second rounding error.
pub fn accurate_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    let mut count = 0u64;
    for v in values {
        count += 1;
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    if count == 0 {
        return 0.0;
    }
    let n = count as f64;
    let q = sum / n;
    let remainder = (-q).mul_add(n, sum);
    q + (remainder + compensation) / n
}

/// Writes the per-instance report: one row per (series, instance, team) with
/// the fixed column order `series,instance,team,reltime,gap,nofeas,f,rank`.
pub fn write_scores_csv<W: Write>(
    w: &mut W,
    table: &RankTable,
    records: &BTreeMap<String, Vec<ScoreRecord>>,
) -> std::io::Result<()> {
    writeln!(w, "series,instance,team,reltime,gap,nofeas,f,rank")?;
    for (&(s, i), cell) in &table.cells {
        for team in &table.teams {
            let rc = &cell[team];
            let rec = records
                .get(team)
                .and_then(|rs| rs.iter().find(|r| r.series == s && r.instance == i));
            let (rt, g, nf) = match rec {
                Some(r) => (r.reltime, r.gap, r.nofeas),
                None => (f64::NAN, f64::NAN, 0),
            };
            writeln!(w, "{s},{i},{team},{rt},{g},{nf},{},{}", rc.f, rc.rank)?;
        }
    }
    Ok(())
}

/// Writes the summary: per-batch means for every (team, series) and one
/// final row per team carrying `C`.
pub fn write_summary_csv<W: Write>(
    w: &mut W,
    batch_rows: &[(String, u32, BatchReport)],
    finals: &BTreeMap<String, f64>,
) -> std::io::Result<()> {
    writeln!(w, "team,series,batch,reltime_mean,gap_mean,nofeas_mean,final_score")?;
    for (team, series, report) in batch_rows {
        for b in &report.batches {
            writeln!(
                w,
                "{team},{series},{}-{},{},{},{},",
                b.first, b.last, b.reltime, b.gap, b.nofeas
            )?;
        }
        let o = &report.overall;
        writeln!(w, "{team},{series},overall,{},{},{},", o.reltime, o.gap, o.nofeas)?;
    }
    for (team, c) in finals {
        writeln!(w, "{team},,C,,,,{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solved(time: f64, limit: f64) -> SolveOutcome {
        SolveOutcome {
            time_spent_seconds: time,
            time_limit_seconds: limit,
            solved_to_optimality: true,
            primal_bound: Some(5.0),
            dual_bound: Some(5.0),
            has_feasible_solution: true,
            stopped_early_without_zero_gap: false,
        }
    }

    fn timeout(pb: Option<f64>, db: Option<f64>, limit: f64) -> SolveOutcome {
        SolveOutcome {
            time_spent_seconds: limit,
            time_limit_seconds: limit,
            solved_to_optimality: false,
            primal_bound: pb,
            dual_bound: db,
            has_feasible_solution: pb.is_some(),
            stopped_early_without_zero_gap: false,
        }
    }

    #[test]
    fn reltime_cases() {
        assert_eq!(reltime(&solved(300.0, 600.0)), 0.5);
        assert_eq!(reltime(&timeout(None, None, 600.0)), 1.0);
        let mut t = timeout(None, None, 600.0);
        t.time_spent_seconds = 590.0;
        assert_eq!(reltime(&t), 1.0);
        t.time_spent_seconds = 660.0;
        assert!((reltime(&t) - 1.1).abs() < 1e-12);
        let mut early = timeout(Some(4.0), Some(2.0), 600.0);
        early.time_spent_seconds = 100.0;
        early.stopped_early_without_zero_gap = true;
        assert_eq!(reltime(&early), 1.0);
    }

    #[test]
    fn gap_branch_table() {
        assert_eq!(gap(Some(0.0), Some(0.0)), 0.0);
        assert_eq!(gap(Some(f64::INFINITY), Some(1.0)), 1.0);
        assert_eq!(gap(None, Some(1.0)), 1.0);
        assert_eq!(gap(Some(10.0), Some(5.0)), 0.5);
        assert_eq!(gap(Some(-10.0), Some(5.0)), 1.0);
        // symmetry
        assert_eq!(gap(Some(5.0), Some(10.0)), 0.5);
    }

    #[test]
    fn instance_score_tiers() {
        let perfect = instance_score(1, 1, &solved(0.0, 600.0));
        assert_eq!(perfect.f, 0.0);

        let hopeless = instance_score(1, 2, &timeout(None, None, 600.0));
        assert_eq!(hopeless.f, 3.0);
        assert_eq!(hopeless.nofeas, 1);

        let incumbent = instance_score(1, 3, &timeout(Some(11.0), Some(10.0), 600.0));
        assert!((incumbent.f - (1.0 + 1.0 / 11.0)).abs() < 1e-12);
    }

    #[test]
    fn asserted_optimality_is_audited() {
        let mut fake = solved(10.0, 600.0);
        fake.dual_bound = Some(4.0); // claims optimal with a 20% gap
        let record = instance_score(1, 1, &fake);
        assert!(record.f > 1.0, "downgraded outcome must leave the solved tier");
        assert_eq!(record.reltime, 1.0);
    }

    #[test]
    fn rank_tie_fixture() {
        let scores: BTreeMap<String, f64> =
            [("a", 0.5), ("b", 0.5), ("c", 1.2)].map(|(t, f)| (t.to_string(), f)).into();
        let validity: BTreeMap<String, bool> =
            scores.keys().map(|t| (t.clone(), true)).collect();
        let ranks = rank_instance(&scores, &validity);
        assert_eq!(ranks["a"], 1);
        assert_eq!(ranks["b"], 1);
        assert_eq!(ranks["c"], 3);
    }

    #[test]
    fn invalid_team_gets_double_worst_rank() {
        let scores: BTreeMap<String, f64> = [("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.05)]
            .map(|(t, f)| (t.to_string(), f))
            .into();
        let mut validity: BTreeMap<String, bool> =
            scores.keys().map(|t| (t.clone(), true)).collect();
        validity.insert("d".into(), false);
        let ranks = rank_instance(&scores, &validity);
        assert_eq!(ranks["d"], 8);
        assert_eq!(ranks["a"], 1);
    }

    #[test]
    fn single_team_ranks_first() {
        let scores: BTreeMap<String, f64> = [("solo".to_string(), 2.7)].into();
        let validity: BTreeMap<String, bool> = [("solo".to_string(), true)].into();
        assert_eq!(rank_instance(&scores, &validity)["solo"], 1);
    }

    #[test]
    fn final_score_all_rank_one() {
        let mut per_team: BTreeMap<String, BTreeMap<(u32, u32), (f64, bool)>> = BTreeMap::new();
        let cells: BTreeMap<(u32, u32), (f64, bool)> =
            (1..=50).map(|i| ((1, i), (0.5, true))).collect();
        per_team.insert("solo".into(), cells);
        let table = build_rank_table(&per_team, 50).unwrap();
        let c = final_score(&table).unwrap();
        assert_eq!(c["solo"], 177.5);
        assert_eq!(instance_weight(10), 2.0);
        assert_eq!(instance_weight(50), 6.0);
    }

    #[test]
    fn final_score_is_linear_in_ranks() {
        let mut per_team: BTreeMap<String, BTreeMap<(u32, u32), (f64, bool)>> = BTreeMap::new();
        per_team.insert("a".into(), (1..=50).map(|i| ((1, i), (0.1, true))).collect());
        per_team.insert("b".into(), (1..=50).map(|i| ((1, i), (0.9, true))).collect());
        let table = build_rank_table(&per_team, 50).unwrap();
        let c = final_score(&table).unwrap();
        assert_eq!(c["b"], 2.0 * c["a"]);
    }

    #[test]
    fn final_score_flags_missing_cells() {
        let mut per_team: BTreeMap<String, BTreeMap<(u32, u32), (f64, bool)>> = BTreeMap::new();
        per_team.insert("a".into(), (1..=49).map(|i| ((1, i), (0.1, true))).collect());
        let table = build_rank_table(&per_team, 50).unwrap();
        assert_eq!(
            final_score(&table).unwrap_err(),
            ScoreError::IncompleteTable { series: 1, instance: 50 }
        );
    }

    fn arithmetic_series_records() -> Vec<ScoreRecord> {
        (1..=50)
            .map(|i| ScoreRecord {
                series: 1,
                instance: i,
                reltime: f64::from(i) / 50.0,
                gap: 0.0,
                nofeas: 0,
                f: f64::from(i) / 50.0,
            })
            .collect()
    }

    #[test]
    fn batch_means_of_arithmetic_series() {
        let report = batch_report(&arithmetic_series_records()).unwrap();
        assert_eq!(report.overall.reltime, 0.51);
        let expected = [0.11, 0.31, 0.51, 0.71, 0.91];
        for (b, e) in report.batches.iter().zip(expected) {
            assert_eq!(b.reltime, e, "batch {}-{}", b.first, b.last);
        }
    }

    #[test]
    fn constant_records_have_equal_batch_means() {
        let records: Vec<ScoreRecord> = (1..=50)
            .map(|i| ScoreRecord { series: 1, instance: i, reltime: 0.4, gap: 0.2, nofeas: 0, f: 0.6 })
            .collect();
        let report = batch_report(&records).unwrap();
        for b in &report.batches {
            assert_eq!(b.reltime, report.overall.reltime);
            assert_eq!(b.gap, report.overall.gap);
        }
    }

    /// Direct per-batch re-summation on randomized records.
    #[test]
    fn batch_means_match_direct_resummation() {
        let mut state = 1234u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let records: Vec<ScoreRecord> = (1..=50)
            .map(|i| {
                let reltime = next();
                let gap = next();
                let nofeas = u8::from(next() < 0.25);
                ScoreRecord {
                    series: 3,
                    instance: i,
                    reltime,
                    gap,
                    nofeas,
                    f: reltime + gap + f64::from(nofeas),
                }
            })
            .collect();
        let report = batch_report(&records).unwrap();
        for (b, start) in report.batches.iter().zip([0usize, 10, 20, 30, 40]) {
            let chunk = &records[start..start + 10];
            let sum: f64 = chunk.iter().map(|r| r.reltime).sum();
            assert!((b.reltime - sum / 10.0).abs() < 1e-12);
            let gap_sum: f64 = chunk.iter().map(|r| r.gap).sum();
            assert!((b.gap - gap_sum / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_report_requires_all_instances() {
        let mut records = arithmetic_series_records();
        records.remove(12);
        assert_eq!(
            batch_report(&records).unwrap_err(),
            ScoreError::IncompleteSeries { missing: vec![13] }
        );
    }

    #[test]
    fn outcome_serde_handles_infinities() {
        let outcome = timeout(None, Some(f64::INFINITY), 60.0);
        let json = serde_json::to_string(&outcome).unwrap();
        let back: SolveOutcome = serde_json::from_str(&json).unwrap();
        assert_eq!(back, outcome);
    }
}
