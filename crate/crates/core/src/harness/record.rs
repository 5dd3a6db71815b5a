//! Run records and their line-delimited JSON persistence.
//!
//! A record is persisted append-only, one JSON document per line: a `meta`
//! line, one `event` line per protocol event (outcomes folded into the
//! `instance_end` lines), and a closing `summary` line carrying the
//! violations and any outcomes the harness synthesized for instances the
//! solver never finalized. A clean 50-instance run is therefore exactly
//! 104 lines. Loading reproduces the record exactly; a torn final line
//! reports its byte offset while keeping everything before it readable.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::events::{LoggedEvent, RunEvent};
use crate::score::SolveOutcome;

/// Resource limits for one series run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLimits {
    pub per_instance_time_limit_seconds: f64,
    pub total_budget_seconds: f64,
    pub memory_limit_bytes: u64,
    pub thread_limit: u32,
}

pub const DEFAULT_MEMORY_LIMIT_BYTES: u64 = 16 * 1024 * 1024 * 1024;

impl RunLimits {
    /// Per-instance limit from the manifest; the series budget defaults to
    /// `instances x limit`.
    pub fn for_series(per_instance: f64, instances: usize) -> Self {
        RunLimits {
            per_instance_time_limit_seconds: per_instance,
            total_budget_seconds: per_instance * instances as f64,
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT_BYTES,
            thread_limit: 1,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.per_instance_time_limit_seconds > 0.0) {
            return Err("per-instance time limit must be positive".into());
        }
        if self.total_budget_seconds < self.per_instance_time_limit_seconds {
            return Err("total budget below the per-instance limit".into());
        }
        if self.thread_limit != 1 {
            return Err("the protocol mandates one thread".into());
        }
        Ok(())
    }
}

/// A scoreable outcome for one instance, with the validity verdict of the
/// feasibility and dual-bound audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedOutcome {
    pub index: u32,
    pub outcome: SolveOutcome,
    pub valid: bool,
    /// True when the harness filled this in for a never-finalized instance.
    pub synthesized: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub manifest_path: String,
    pub series_name: String,
    pub solver_command: Vec<String>,
    pub limits: RunLimits,
}

/// Everything the harness observed in one series run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRunRecord {
    pub meta: RunMeta,
    pub events: Vec<LoggedEvent>,
    /// One outcome per manifest instance, in manifest order.
    pub outcomes: Vec<RecordedOutcome>,
    pub protocol_violations: Vec<String>,
    pub solver_exit_code: Option<i32>,
}

impl SeriesRunRecord {
    pub fn events_only(&self) -> Vec<RunEvent> {
        self.events.iter().map(|e| e.event.clone()).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RecordLine {
    Meta {
        meta: RunMeta,
    },
    Event {
        event: LoggedEvent,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        outcome: Option<RecordedOutcome>,
    },
    Summary {
        protocol_violations: Vec<String>,
        synthesized_outcomes: Vec<RecordedOutcome>,
        solver_exit_code: Option<i32>,
    },
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line} is not valid JSON: {message}")]
    Corrupt { path: String, line: usize, message: String },
    #[error(
        "{path}: truncated final line starting at byte offset {byte_offset}; \
         {recovered_lines} prior lines recovered"
    )]
    Truncated {
        path: String,
        byte_offset: u64,
        recovered_lines: usize,
        /// The record rebuilt from the intact prefix, when the prefix at
        /// least contains the meta line.
        recovered: Option<Box<SeriesRunRecord>>,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
}

/// Serializes the record as line-delimited JSON.
pub fn persist_run(record: &SeriesRunRecord, path: &Path) -> Result<(), PersistError> {
    let io_err = |source| PersistError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    let mut write_line = |line: &RecordLine| -> Result<(), PersistError> {
        let json = serde_json::to_string(line).expect("record lines serialize");
        writeln!(w, "{json}").map_err(io_err)
    };

    write_line(&RecordLine::Meta { meta: record.meta.clone() })?;
    for logged in &record.events {
        let outcome = if logged.event.payload.is_some() {
            record
                .outcomes
                .iter()
                .find(|o| o.index == logged.event.instance_index && !o.synthesized)
                .cloned()
        } else {
            None
        };
        write_line(&RecordLine::Event { event: logged.clone(), outcome })?;
    }
    let synthesized: Vec<RecordedOutcome> =
        record.outcomes.iter().filter(|o| o.synthesized).cloned().collect();
    write_line(&RecordLine::Summary {
        protocol_violations: record.protocol_violations.clone(),
        synthesized_outcomes: synthesized,
        solver_exit_code: record.solver_exit_code,
    })?;
    let mut w = w.into_inner().map_err(|e| io_err(e.into_error()))?;
    w.flush().map_err(io_err)
}

/// Loads a persisted record. The reverse of [`persist_run`].
pub fn load_run(path: &Path) -> Result<SeriesRunRecord, PersistError> {
    let io_err = |source| PersistError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let reader = std::io::BufReader::new(file);

    let mut lines: Vec<RecordLine> = Vec::new();
    let mut offset: u64 = 0;
    let mut line_no = 0usize;
    let mut raw_lines = reader.lines();
    loop {
        let line_start = offset;
        let Some(raw) = raw_lines.next() else { break };
        let raw = raw.map_err(io_err)?;
        line_no += 1;
        offset += raw.len() as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RecordLine>(&raw) {
            Ok(line) => lines.push(line),
            Err(e) => {
                // A bad final line is a torn append; anything earlier is
                // corruption.
                if raw_lines.next().is_none() {
                    let recovered = assemble(path, lines, true).ok().map(Box::new);
                    return Err(PersistError::Truncated {
                        path: path.display().to_string(),
                        byte_offset: line_start,
                        recovered_lines: line_no - 1,
                        recovered,
                    });
                }
                return Err(PersistError::Corrupt {
                    path: path.display().to_string(),
                    line: line_no,
                    message: e.to_string(),
                });
            }
        }
    }
    assemble(path, lines, false)
}

fn assemble(
    path: &Path,
    lines: Vec<RecordLine>,
    allow_missing_summary: bool,
) -> Result<SeriesRunRecord, PersistError> {
    let malformed = |message: String| PersistError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let mut meta = None;
    let mut events = Vec::new();
    let mut outcomes: Vec<RecordedOutcome> = Vec::new();
    let mut violations = Vec::new();
    let mut exit_code = None;
    let mut saw_summary = false;
    for line in lines {
        match line {
            RecordLine::Meta { meta: m } => {
                if meta.replace(m).is_some() {
                    return Err(malformed("duplicate meta line".into()));
                }
            }
            RecordLine::Event { event, outcome } => {
                if saw_summary {
                    return Err(malformed("event after summary line".into()));
                }
                events.push(event);
                if let Some(o) = outcome {
                    outcomes.push(o);
                }
            }
            RecordLine::Summary { protocol_violations, synthesized_outcomes, solver_exit_code } => {
                if saw_summary {
                    return Err(malformed("duplicate summary line".into()));
                }
                saw_summary = true;
                violations = protocol_violations;
                outcomes.extend(synthesized_outcomes);
                exit_code = solver_exit_code;
            }
        }
    }
    if !saw_summary && !allow_missing_summary {
        return Err(malformed("missing summary line".into()));
    }
    let meta = meta.ok_or_else(|| malformed("missing meta line".into()))?;
    outcomes.sort_by_key(|o| o.index);
    Ok(SeriesRunRecord {
        meta,
        events,
        outcomes,
        protocol_violations: violations,
        solver_exit_code: exit_code,
    })
}
