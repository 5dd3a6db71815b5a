//! Reference reoptimizing solver.
//!
//! The baseline keeps a small pool of recent solutions and, for each new
//! instance of a series, re-validates them against the new data, hands the
//! best survivor to the backend as a warm incumbent, and passes its objective
//! as a cutoff. That is deliberately the smallest thing that demonstrates the
//! setting: primal information carries over because the variable space is
//! identical across a series.
//!
//! [`serve_protocol`] wraps the loop in the harness event protocol: instances
//! are opened strictly one at a time in manifest order, the warm incumbent is
//! parked in the incumbent drop-box (`<manifest dir>/incumbents/NN.sol`)
//! while the solve runs, and final solutions are written to
//! `<manifest dir>/solutions/NN.sol` and reported in the end event.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::harness::events::{self, EndPayload, RunEvent, SolveStatus};
use crate::model::{FeasTolerances, Instance, ModelError, Sense, Solution};
use crate::mps::{self, MpsDialect};
use crate::oracle::{self, EnumerableInstance};
use crate::score::SolveOutcome;
use crate::simgen::{self, SeriesManifest};
use crate::solfile;

/// Most recent distinct solutions kept across instances.
pub const POOL_CAP: usize = 5;
/// Cutoff slack so backend-side rounding cannot cut off the warm solution.
pub const CUTOFF_SLACK: f64 = 1e-9;
/// A variable counts as fixed at a bound within this tolerance.
const BOUND_STAT_TOL: f64 = 1e-9;

/// A feasible assignment with its objective under a specific instance.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmSolution {
    pub solution: Solution,
    pub objective: f64,
}

/// Information carried from instance to instance.
#[derive(Debug, Clone, Default)]
pub struct CarryState {
    /// Most recent solutions first.
    pool: Vec<WarmSolution>,
    pub previous_instance: Option<Instance>,
    /// Per variable: in how many solved instances its value sat on one of
    /// its bounds.
    pub bound_fix_counts: Vec<u64>,
    pub solved_instances: u64,
}

impl CarryState {
    pub fn new() -> Self {
        CarryState::default()
    }

    pub fn pool(&self) -> &[WarmSolution] {
        &self.pool
    }

    fn remember(&mut self, instance: &Instance, solution: Solution, objective: f64) {
        self.pool.retain(|w| w.solution != solution);
        self.pool.insert(0, WarmSolution { solution: solution.clone(), objective });
        self.pool.truncate(POOL_CAP);

        if self.bound_fix_counts.len() != instance.variables.len() {
            self.bound_fix_counts = vec![0; instance.variables.len()];
        }
        for (count, (v, &x)) in
            self.bound_fix_counts.iter_mut().zip(instance.variables.iter().zip(&solution.values))
        {
            if (x - v.lower).abs() <= BOUND_STAT_TOL || (v.upper - x).abs() <= BOUND_STAT_TOL {
                *count += 1;
            }
        }
        self.solved_instances += 1;
    }
}

/// Sign that turns both senses into minimization for comparisons.
fn sense_sign(sense: Sense) -> f64 {
    match sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    }
}

/// Picks the best pool solution that is still feasible for `next`,
/// re-evaluated under `next`'s objective. `None` when nothing survives.
pub fn carry_incumbent(state: &CarryState, next: &Instance) -> Result<Option<WarmSolution>, ModelError> {
    let tolerances = FeasTolerances::default();
    let sign = sense_sign(next.sense);
    let mut best: Option<WarmSolution> = None;
    for entry in &state.pool {
        if entry.solution.len() != next.variables.len() {
            return Err(ModelError::LengthMismatch {
                expected: next.variables.len(),
                got: entry.solution.len(),
            });
        }
        let report = next.check_feasibility(&entry.solution, &tolerances)?;
        if !report.feasible {
            continue;
        }
        let objective = next.objective_value(&entry.solution)?;
        let better = match &best {
            None => true,
            Some(b) => sign * objective < sign * b.objective,
        };
        if better {
            best = Some(WarmSolution { solution: entry.solution.clone(), objective });
        }
    }
    Ok(best)
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend failed: {0}")]
    Failed(String),
}

/// What a backend returns for one instance.
#[derive(Debug, Clone)]
pub struct BackendResult {
    pub outcome: SolveOutcome,
    pub solution: Option<Solution>,
    pub status: SolveStatus,
}

/// An exact solver of a single instance under a time limit, optionally
/// seeded with a warm solution and a cutoff bound. Implementations must
/// respect the time limit within 10%.
pub trait Backend {
    fn solve(
        &self,
        instance: &Instance,
        time_limit: f64,
        warm: Option<&WarmSolution>,
        cutoff: Option<f64>,
    ) -> Result<BackendResult, BackendError>;

    fn name(&self) -> &str;
}

/// The built-in enumeration backend.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    pub domain_cap: u128,
}

impl Default for OracleBackend {
    fn default() -> Self {
        OracleBackend { domain_cap: oracle::DEFAULT_DOMAIN_CAP }
    }
}

impl Backend for OracleBackend {
    fn solve(
        &self,
        instance: &Instance,
        time_limit: f64,
        warm: Option<&WarmSolution>,
        _cutoff: Option<f64>,
    ) -> Result<BackendResult, BackendError> {
        // Exhaustive enumeration needs no cutoff pruning; the warm solution
        // seeds the incumbent so the primal bound is available from zero.
        let enumerable = EnumerableInstance::with_cap(instance.clone(), self.domain_cap)
            .map_err(|e| BackendError::Failed(e.to_string()))?;
        let seeded = warm.map(|w| (&w.solution, w.objective));
        let result = oracle::enumerate_solve_seeded(&enumerable, time_limit, seeded);
        Ok(BackendResult { outcome: result.outcome, solution: result.solution, status: result.status })
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

/// Adapter for an external single-instance solver.
///
/// The command is invoked as
/// `<command...> --instance <mps> --time-limit <secs> --solution-out <path>`
/// plus `--cutoff <value>` when one is known, and must print `PB <v>`,
/// `DB <v>` (`v` a number, `inf`, `-inf` or `none`) and
/// `STATUS <optimal|timeout_incumbent|timeout_nofeas|error>` lines on
/// stdout. A solution file is read back when the status carries one.
#[derive(Debug, Clone)]
pub struct ExecBackend {
    pub command: Vec<String>,
}

impl Backend for ExecBackend {
    fn solve(
        &self,
        instance: &Instance,
        time_limit: f64,
        warm: Option<&WarmSolution>,
        cutoff: Option<f64>,
    ) -> Result<BackendResult, BackendError> {
        let dir = std::env::temp_dir().join(format!(
            "reoptbench-exec-{}-{:x}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or(0)
        ));
        std::fs::create_dir_all(&dir).map_err(|e| BackendError::Failed(e.to_string()))?;
        let result = self.solve_in(instance, time_limit, warm, cutoff, &dir);
        let _ = std::fs::remove_dir_all(&dir);
        result
    }

    fn name(&self) -> &str {
        "exec"
    }
}

impl ExecBackend {
    fn solve_in(
        &self,
        instance: &Instance,
        time_limit: f64,
        warm: Option<&WarmSolution>,
        cutoff: Option<f64>,
        dir: &Path,
    ) -> Result<BackendResult, BackendError> {
        let fail = |msg: String| BackendError::Failed(msg);
        let instance_path = dir.join("instance.mps");
        mps::write_mps_file(instance, &MpsDialect::default(), &instance_path)
            .map_err(|e| fail(e.to_string()))?;
        let solution_path = dir.join("solution.sol");
        if let Some(w) = warm {
            let warm_path = dir.join("warm.sol");
            solfile::write_solution(&warm_path, instance, &w.solution)
                .map_err(|e| fail(e.to_string()))?;
        }

        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| fail("empty backend command".into()))?;
        let mut cmd = std::process::Command::new(program);
        cmd.args(args)
            .arg("--instance")
            .arg(&instance_path)
            .arg("--time-limit")
            .arg(format!("{time_limit}"))
            .arg("--solution-out")
            .arg(&solution_path);
        if let Some(c) = cutoff {
            cmd.arg("--cutoff").arg(format!("{c}"));
        }
        if warm.is_some() {
            cmd.arg("--warm").arg(dir.join("warm.sol"));
        }
        let started = Instant::now();
        let output = cmd.output().map_err(|e| fail(format!("spawn {program}: {e}")))?;
        let elapsed = started.elapsed().as_secs_f64();
        if !output.status.success() {
            return Err(fail(format!("backend exited with {}", output.status)));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut pb = None;
        let mut db = None;
        let mut status = None;
        for line in stdout.lines() {
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("PB"), Some(v)) => pb = parse_ext(v),
                (Some("DB"), Some(v)) => db = parse_ext(v),
                (Some("STATUS"), Some(s)) => {
                    status = Some(match s {
                        "optimal" => SolveStatus::Optimal,
                        "timeout_incumbent" => SolveStatus::TimeoutIncumbent,
                        "timeout_nofeas" => SolveStatus::TimeoutNofeas,
                        _ => SolveStatus::Error,
                    })
                }
                _ => {}
            }
        }
        let status = status.ok_or_else(|| fail("backend printed no STATUS line".into()))?;
        let solution = if matches!(status, SolveStatus::Optimal | SolveStatus::TimeoutIncumbent) {
            match solfile::read_solution(&solution_path, instance) {
                Ok(s) => Some(s),
                Err(e) => return Err(fail(format!("backend solution unreadable: {e}"))),
            }
        } else {
            None
        };
        let outcome = SolveOutcome {
            time_spent_seconds: elapsed,
            time_limit_seconds: time_limit,
            solved_to_optimality: status == SolveStatus::Optimal,
            primal_bound: pb,
            dual_bound: db,
            has_feasible_solution: solution.is_some() && pb.is_some(),
            stopped_early_without_zero_gap: false,
        };
        Ok(BackendResult { outcome, solution, status })
    }
}

fn parse_ext(tok: &str) -> Option<f64> {
    match tok {
        "none" => None,
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

/// One reoptimizing solve: validates the carried pool against `next`, seeds
/// the backend, and folds the result back into the state.
///
/// The reported primal bound is never worse than a surviving warm solution's
/// objective. A backend failure yields an error outcome and leaves the state
/// unchanged.
pub fn solve_reopt(
    state: CarryState,
    next: &Instance,
    time_limit: f64,
    backend: &dyn Backend,
) -> (BackendResult, CarryState) {
    let warm = match carry_incumbent(&state, next) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("reopt: carry failed: {e}");
            return (error_result(time_limit), state);
        }
    };
    let sign = sense_sign(next.sense);
    let cutoff = warm.as_ref().map(|w| w.objective + sign * CUTOFF_SLACK);
    let mut result = match backend.solve(next, time_limit, warm.as_ref(), cutoff) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("reopt: backend {}: {e}", backend.name());
            return (error_result(time_limit), state);
        }
    };

    // Warm-start dominance: a surviving pool solution is a known incumbent,
    // so the outcome can never be worse than its objective.
    if let Some(w) = &warm {
        let backend_worse = match result.outcome.primal_bound {
            None => true,
            Some(pb) => sign * pb > sign * w.objective,
        };
        if backend_worse {
            result.outcome.primal_bound = Some(w.objective);
            result.outcome.has_feasible_solution = true;
            result.solution = Some(w.solution.clone());
            if result.status == SolveStatus::TimeoutNofeas {
                result.status = SolveStatus::TimeoutIncumbent;
            }
        }
    }

    let mut state = state;
    if let (true, Some(solution), Some(pb)) =
        (result.outcome.has_feasible_solution, result.solution.clone(), result.outcome.primal_bound)
    {
        state.remember(next, solution, pb);
    }
    state.previous_instance = Some(next.clone());
    (result, state)
}

fn error_result(time_limit: f64) -> BackendResult {
    BackendResult {
        outcome: SolveOutcome {
            time_spent_seconds: 0.0,
            time_limit_seconds: time_limit,
            solved_to_optimality: false,
            primal_bound: None,
            dual_bound: None,
            has_feasible_solution: false,
            stopped_early_without_zero_gap: true,
        },
        solution: None,
        status: SolveStatus::Error,
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Manifest(#[from] simgen::GenError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Drives a full series over the harness protocol, writing events to `out`.
///
/// Instance `i + 1`'s file is never opened before instance `i`'s end event
/// is emitted. An unreadable instance produces an `error` end event and the
/// series continues.
pub fn serve_protocol(
    manifest_path: &Path,
    backend: &dyn Backend,
    out: &mut dyn Write,
) -> Result<(), ServeError> {
    let manifest = simgen::load_manifest(manifest_path)?;
    let paths = simgen::instance_paths(&manifest, manifest_path);
    // Absolute output paths keep the reported solution files resolvable for
    // consumers with a different working directory.
    let base_dir = manifest_path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let base_dir = std::fs::canonicalize(&base_dir).unwrap_or(base_dir);
    let solutions_dir = base_dir.join("solutions");
    let incumbents_dir = base_dir.join("incumbents");
    for dir in [&solutions_dir, &incumbents_dir] {
        std::fs::create_dir_all(dir)
            .map_err(|source| ServeError::Io { path: dir.display().to_string(), source })?;
    }

    let mut clock = Clock::new();
    let emit = |event: RunEvent, out: &mut dyn Write| -> Result<(), ServeError> {
        let line = events::format_event(&event);
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(|source| ServeError::Io { path: "<stdout>".into(), source })?;
        Ok(())
    };

    emit(RunEvent::series_start(clock.now()), out)?;
    let mut state = CarryState::new();
    for (idx, path) in paths.iter().enumerate() {
        let index = idx as u32 + 1;
        emit(RunEvent::instance_begin(index, clock.now()), out)?;

        let parsed = mps::parse_mps_file(path, &MpsDialect::default());
        let payload = match parsed {
            Err(e) => {
                eprintln!("reopt: instance {index}: {e}");
                EndPayload {
                    primal_bound: None,
                    dual_bound: None,
                    status: SolveStatus::Error,
                    solution_path: None,
                }
            }
            Ok(parsed) => {
                let instance = parsed.instance;
                let file_stem = instance_stem(&manifest, idx);

                // Park the warm incumbent so a harness kill mid-solve still
                // finds a feasible solution for this instance.
                let incumbent_path = incumbents_dir.join(format!("{file_stem}.sol"));
                if let Ok(Some(warm)) = carry_incumbent(&state, &instance) {
                    let _ = solfile::write_solution(&incumbent_path, &instance, &warm.solution);
                } else {
                    let _ = std::fs::remove_file(&incumbent_path);
                }

                let (result, new_state) =
                    solve_reopt(state, &instance, manifest.time_limit_seconds, backend);
                state = new_state;

                let solution_path = match &result.solution {
                    Some(solution) => {
                        let path = solutions_dir.join(format!("{file_stem}.sol"));
                        match solfile::write_solution(&path, &instance, solution) {
                            Ok(()) => Some(path.display().to_string()),
                            Err(e) => {
                                eprintln!("reopt: instance {index}: cannot write solution: {e}");
                                None
                            }
                        }
                    }
                    None => None,
                };
                // The instance is finalized now; the drop-box copy is stale.
                let _ = std::fs::remove_file(&incumbent_path);
                EndPayload {
                    primal_bound: result.outcome.primal_bound,
                    dual_bound: result.outcome.dual_bound,
                    status: result.status,
                    solution_path,
                }
            }
        };
        emit(RunEvent::instance_end(index, clock.now(), payload), out)?;
    }
    emit(RunEvent::series_end(clock.now()), out)?;
    Ok(())
}

fn instance_stem(manifest: &SeriesManifest, idx: usize) -> String {
    Path::new(&manifest.instance_files[idx])
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("{:02}", idx + 1))
}

/// Strictly increasing monotonic timestamps.
struct Clock {
    start: Instant,
    last: f64,
}

impl Clock {
    fn new() -> Self {
        Clock { start: Instant::now(), last: -1.0 }
    }

    fn now(&mut self) -> f64 {
        let mut t = self.start.elapsed().as_secs_f64();
        if t <= self.last {
            t = self.last + 1e-9;
        }
        self.last = t;
        t
    }
}

/// Incumbent drop-box path the harness checks for instances that were begun
/// but never finalized.
pub fn incumbent_path(manifest_path: &Path, manifest: &SeriesManifest, idx: usize) -> PathBuf {
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    base.join("incumbents").join(format!("{}.sol", instance_stem(manifest, idx)))
}
