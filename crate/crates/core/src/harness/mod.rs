//! Drives an external solver over one series under the sequential protocol.
//!
//! The solver is launched once per series as `<command...> --manifest <path>`
//! so it can keep in-memory state across instances, which is the entire point
//! of the setting. Its stdout is the event channel (see [`events`]); stderr
//! passes through. The harness stamps every received event with its own
//! monotonic clock and charges each instance the wall time between its begin
//! and end receipts. A run is killed when the series budget runs out;
//! instances without an end event are scored from the incumbent drop-box
//! (`<manifest dir>/incumbents/<stem>.sol`): a feasible parked solution
//! yields `timeout_incumbent`, anything else `timeout_nofeas`. Protocol
//! violations are recorded, never repaired; only a malformed event stream
//! aborts the run.

pub mod events;
pub mod record;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{FeasTolerances, Instance, Sense};
use crate::mps::{self, MpsDialect};
use crate::score::{SolveOutcome, DUAL_BOUND_TOLERANCE};
use crate::simgen::{self, SeriesManifest};
use crate::solfile;
use events::{EndPayload, EventKind, LoggedEvent, SolveStatus};
use record::{RecordedOutcome, RunLimits, RunMeta, SeriesRunRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Manifest(#[from] simgen::GenError),
    #[error("instance file {path} is missing")]
    MissingInstance { path: String },
    #[error("cannot spawn solver {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid limits: {0}")]
    Limits(String),
    #[error("protocol error at solver output line {line}: {message} (line was {content:?})")]
    Protocol { line: usize, content: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Runs `solver_command` over the series described by `manifest_path`.
///
/// Returns the full run record; protocol violations are data inside it. The
/// hard failures are unspawnable solvers, unreadable manifests/instances and
/// malformed event streams.
pub fn run_series(
    solver_command: &[String],
    manifest_path: &Path,
    limits: &RunLimits,
) -> Result<SeriesRunRecord, HarnessError> {
    limits.validate().map_err(HarnessError::Limits)?;
    let manifest = simgen::load_manifest(manifest_path)?;
    let instance_paths = simgen::instance_paths(&manifest, manifest_path);
    for p in &instance_paths {
        if !p.is_file() {
            return Err(HarnessError::MissingInstance { path: p.display().to_string() });
        }
    }
    let (program, args) = solver_command
        .split_first()
        .ok_or_else(|| HarnessError::Limits("empty solver command".into()))?;

    let mut command = Command::new(program);
    command
        .args(args)
        .arg("--manifest")
        .arg(manifest_path)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit());
    apply_memory_limit(&mut command, limits.memory_limit_bytes);

    let mut child = command.spawn().map_err(|source| HarnessError::Spawn {
        command: solver_command.join(" "),
        source,
    })?;
    let stdout = child.stdout.take().expect("stdout is piped");

    let start = Instant::now();
    let (tx, rx) = mpsc::channel::<std::io::Result<String>>();
    let reader = std::thread::spawn(move || {
        for line in std::io::BufReader::new(stdout).lines() {
            let done = line.is_err();
            if tx.send(line).is_err() || done {
                break;
            }
        }
    });

    let mut logged: Vec<LoggedEvent> = Vec::new();
    let mut violations: Vec<String> = Vec::new();
    let mut line_no = 0usize;
    let mut budget_killed = false;
    let kill_time;
    loop {
        let elapsed = start.elapsed().as_secs_f64();
        let remaining = limits.total_budget_seconds - elapsed;
        if remaining <= 0.0 {
            kill_quietly(&mut child);
            budget_killed = true;
            kill_time = elapsed;
            violations.push(format!(
                "series budget of {} s exceeded; solver terminated",
                limits.total_budget_seconds
            ));
            break;
        }
        match rx.recv_timeout(Duration::from_secs_f64(remaining)) {
            Ok(Ok(line)) => {
                line_no += 1;
                let received = start.elapsed().as_secs_f64();
                match events::parse_event_line(&line) {
                    Ok(event) => logged.push(LoggedEvent { event, harness_seconds: received }),
                    Err(message) => {
                        kill_quietly(&mut child);
                        return Err(HarnessError::Protocol { line: line_no, content: line, message });
                    }
                }
            }
            Ok(Err(e)) => {
                violations.push(format!("error reading solver output: {e}"));
                kill_time = start.elapsed().as_secs_f64();
                break;
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                kill_time = start.elapsed().as_secs_f64(); // EOF
                break;
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {
                kill_quietly(&mut child);
                budget_killed = true;
                kill_time = start.elapsed().as_secs_f64();
                violations.push(format!(
                    "series budget of {} s exceeded; solver terminated",
                    limits.total_budget_seconds
                ));
                break;
            }
        }
    }
    // Drain anything the solver managed to write before a kill. The pipe
    // reaches EOF once the child is gone; the deadline guards against
    // orphaned grandchildren keeping it open.
    let drain_deadline = Instant::now() + Duration::from_secs(2);
    loop {
        match rx.recv_timeout(Duration::from_millis(50)) {
            Ok(Ok(line)) => {
                line_no += 1;
                let received = start.elapsed().as_secs_f64();
                match events::parse_event_line(&line) {
                    Ok(event) => logged.push(LoggedEvent { event, harness_seconds: received }),
                    Err(message) => {
                        kill_quietly(&mut child);
                        return Err(HarnessError::Protocol { line: line_no, content: line, message });
                    }
                }
            }
            Ok(Err(_)) | Err(mpsc::RecvTimeoutError::Disconnected) => break,
            Err(mpsc::RecvTimeoutError::Timeout) => {
                if Instant::now() >= drain_deadline {
                    break;
                }
            }
        }
    }
    kill_quietly(&mut child);
    let exit_status = child.wait().ok();
    drop(reader); // detach; the thread exits once the pipe reaches EOF

    let instance_count = manifest.len() as u32;
    violations.extend(events::validate_event_log(
        &logged.iter().map(|l| l.event.clone()).collect::<Vec<_>>(),
        instance_count,
    ));
    let exit_code = exit_status.and_then(|s| s.code());
    if !budget_killed {
        match exit_code {
            Some(0) => {}
            Some(code) => violations.push(format!("solver exited with status {code}")),
            None => violations.push("solver terminated by signal".to_string()),
        }
    }

    let outcomes =
        assemble_outcomes(&manifest, manifest_path, &instance_paths, &logged, limits, kill_time);

    Ok(SeriesRunRecord {
        meta: RunMeta {
            manifest_path: manifest_path.display().to_string(),
            series_name: manifest.series_name.clone(),
            solver_command: solver_command.to_vec(),
            limits: limits.clone(),
        },
        events: logged,
        outcomes,
        protocol_violations: violations,
        solver_exit_code: exit_code,
    })
}

#[cfg(unix)]
fn apply_memory_limit(command: &mut Command, bytes: u64) {
    use std::os::unix::process::CommandExt;
    // Best-effort enforcement of the declared limit.
    unsafe {
        command.pre_exec(move || {
            let limit = libc::rlimit { rlim_cur: bytes, rlim_max: bytes };
            libc::setrlimit(libc::RLIMIT_AS, &limit);
            Ok(())
        });
    }
}

#[cfg(not(unix))]
fn apply_memory_limit(_command: &mut Command, _bytes: u64) {}

fn kill_quietly(child: &mut Child) {
    let _ = child.kill();
}

/// Builds one scoreable outcome per manifest instance from the event log,
/// synthesizing timeout outcomes for instances without an end event and
/// auditing every claimed solution.
fn assemble_outcomes(
    manifest: &SeriesManifest,
    manifest_path: &Path,
    instance_paths: &[PathBuf],
    logged: &[LoggedEvent],
    limits: &RunLimits,
    kill_time: f64,
) -> Vec<RecordedOutcome> {
    let mut begins: BTreeMap<u32, f64> = BTreeMap::new();
    let mut ends: BTreeMap<u32, (f64, &EndPayload)> = BTreeMap::new();
    for l in logged {
        match l.event.kind {
            EventKind::InstanceBegin => {
                begins.entry(l.event.instance_index).or_insert(l.harness_seconds);
            }
            EventKind::InstanceEnd => {
                if let Some(p) = &l.event.payload {
                    ends.entry(l.event.instance_index).or_insert((l.harness_seconds, p));
                }
            }
            _ => {}
        }
    }

    let mut outcomes = Vec::with_capacity(manifest.len());
    for idx in 0..manifest.len() {
        let index = idx as u32 + 1;
        let limit = limits.per_instance_time_limit_seconds;
        let begin = begins.get(&index).copied();
        // An invalid outcome (infeasible solution, crossed dual bound) is a
        // scoring matter recorded on the outcome itself, not a protocol
        // violation: the run stands, the result gets the ranking penalty.
        let recorded = match ends.get(&index) {
            Some(&(end_stamp, payload)) => {
                let time_spent = (end_stamp - begin.unwrap_or(end_stamp)).max(0.0);
                let mut outcome = outcome_from_payload(payload, time_spent, limit);
                let (valid, note) =
                    audit(payload.solution_path.as_deref(), &mut outcome, &instance_paths[idx]);
                RecordedOutcome { index, outcome, valid, synthesized: false, note }
            }
            None => {
                let time_spent = begin.map(|b| (kill_time - b).max(0.0)).unwrap_or(0.0);
                synthesize_timeout(manifest, manifest_path, idx, time_spent, limit, &instance_paths[idx])
            }
        };
        outcomes.push(recorded);
    }
    outcomes
}

fn outcome_from_payload(payload: &EndPayload, time_spent: f64, limit: f64) -> SolveOutcome {
    let status = payload.status;
    let has_feasible = matches!(status, SolveStatus::Optimal | SolveStatus::TimeoutIncumbent)
        && payload.primal_bound.is_some();
    SolveOutcome {
        time_spent_seconds: time_spent,
        time_limit_seconds: limit,
        solved_to_optimality: status == SolveStatus::Optimal,
        primal_bound: payload.primal_bound,
        dual_bound: payload.dual_bound,
        has_feasible_solution: has_feasible,
        stopped_early_without_zero_gap: status != SolveStatus::Optimal
            && status != SolveStatus::Error
            && time_spent < limit,
    }
}

/// Feasibility and dual-bound audit of a finalized outcome. Returns the
/// validity flag and an explanatory note when something failed.
fn audit(
    solution_path: Option<&str>,
    outcome: &mut SolveOutcome,
    instance_path: &Path,
) -> (bool, Option<String>) {
    let instance = match load_instance(instance_path) {
        Ok(i) => i,
        Err(e) => return (false, Some(format!("cannot audit: {e}"))),
    };
    let mut valid = true;
    let mut notes = Vec::new();

    if let Some(path) = solution_path {
        match solfile::read_solution(Path::new(path), &instance) {
            Ok(solution) => match instance.check_feasibility(&solution, &FeasTolerances::default()) {
                Ok(report) if report.feasible => {}
                Ok(report) => {
                    valid = false;
                    notes.push(format!(
                        "returned solution is infeasible (worst offender {:?})",
                        report.worst_offender.unwrap_or_default()
                    ));
                }
                Err(e) => {
                    valid = false;
                    notes.push(format!("solution rejected: {e}"));
                }
            },
            Err(e) => {
                valid = false;
                notes.push(format!("solution file unreadable: {e}"));
            }
        }
    } else if outcome.has_feasible_solution {
        valid = false;
        notes.push("feasible solution claimed but no solution file reported".to_string());
    }

    if let (Some(pb), Some(db)) = (outcome.primal_bound, outcome.dual_bound) {
        if pb.is_finite() && db.is_finite() {
            let crossed = match instance.sense {
                Sense::Minimize => db > pb + DUAL_BOUND_TOLERANCE,
                Sense::Maximize => db < pb - DUAL_BOUND_TOLERANCE,
            };
            if crossed {
                valid = false;
                notes.push(format!("dual bound {db} crosses primal bound {pb}"));
            }
        }
    }
    let note = if notes.is_empty() { None } else { Some(notes.join("; ")) };
    (valid, note)
}

/// Outcome for an instance the solver never finalized: a feasible parked
/// incumbent makes it a timeout with that incumbent, otherwise a timeout
/// with nothing.
fn synthesize_timeout(
    manifest: &SeriesManifest,
    manifest_path: &Path,
    idx: usize,
    time_spent: f64,
    limit: f64,
    instance_path: &Path,
) -> RecordedOutcome {
    let index = idx as u32 + 1;
    let incumbent = crate::reopt::incumbent_path(manifest_path, manifest, idx);
    let nofeas = |note: Option<String>| RecordedOutcome {
        index,
        outcome: SolveOutcome {
            time_spent_seconds: time_spent,
            time_limit_seconds: limit,
            solved_to_optimality: false,
            primal_bound: None,
            dual_bound: None,
            has_feasible_solution: false,
            stopped_early_without_zero_gap: false,
        },
        valid: true,
        synthesized: true,
        note,
    };
    if !incumbent.is_file() {
        return nofeas(Some("no end event and no parked incumbent".into()));
    }
    let instance = match load_instance(instance_path) {
        Ok(i) => i,
        Err(e) => return nofeas(Some(format!("cannot audit parked incumbent: {e}"))),
    };
    match solfile::read_solution(&incumbent, &instance) {
        Ok(solution) => {
            let feasible = instance
                .check_feasibility(&solution, &FeasTolerances::default())
                .map(|r| r.feasible)
                .unwrap_or(false);
            let objective = instance.objective_value(&solution).ok();
            match (feasible, objective) {
                (true, Some(obj)) => RecordedOutcome {
                    index,
                    outcome: SolveOutcome {
                        time_spent_seconds: time_spent,
                        time_limit_seconds: limit,
                        solved_to_optimality: false,
                        primal_bound: Some(obj),
                        dual_bound: None,
                        has_feasible_solution: true,
                        stopped_early_without_zero_gap: false,
                    },
                    valid: true,
                    synthesized: true,
                    note: Some("scored from the parked incumbent".into()),
                },
                _ => RecordedOutcome {
                    index,
                    outcome: SolveOutcome {
                        time_spent_seconds: time_spent,
                        time_limit_seconds: limit,
                        solved_to_optimality: false,
                        primal_bound: objective,
                        dual_bound: None,
                        has_feasible_solution: objective.is_some(),
                        stopped_early_without_zero_gap: false,
                    },
                    valid: false,
                    synthesized: true,
                    note: Some("parked incumbent is infeasible".into()),
                },
            }
        }
        Err(e) => nofeas(Some(format!("parked incumbent unreadable: {e}"))),
    }
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    mps::parse_mps_file(path, &MpsDialect::default())
        .map(|p| p.instance)
        .map_err(|e| e.to_string())
}

/// Convenience wrapper: run and persist in one step.
pub fn run_and_persist(
    solver_command: &[String],
    manifest_path: &Path,
    limits: &RunLimits,
    record_path: &Path,
) -> Result<SeriesRunRecord, HarnessError> {
    let record = run_series(solver_command, manifest_path, limits)?;
    record::persist_run(&record, record_path).map_err(|e| HarnessError::Io {
        path: record_path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(record)
}
