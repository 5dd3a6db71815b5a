//! The line-based solver event protocol.
//!
//! A solver driven by the harness writes one event per line to stdout:
//!
//! ```text
//! EVENT series_start 0 <t>
//! EVENT instance_begin <i> <t>
//! EVENT instance_end <i> <t> <pb> <db> <status> [<solution_path>]
//! EVENT series_end 0 <t>
//! ```
//!
//! `<t>` is the solver's monotonic clock in seconds and must be strictly
//! increasing across events. `<i>` is the 1-based instance index (0 for the
//! series events). `<pb>` and `<db>` are decimal numbers, `inf`, `-inf`, or
//! `none`; `<status>` is one of `optimal`, `timeout_incumbent`,
//! `timeout_nofeas`, `error`. The optional solution path must not contain
//! whitespace.

use serde::{Deserialize, Serialize};

use crate::serde_util::opt_extreal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SeriesStart,
    InstanceBegin,
    InstanceEnd,
    SeriesEnd,
}

impl EventKind {
    pub fn wire_name(self) -> &'static str {
        match self {
            EventKind::SeriesStart => "series_start",
            EventKind::InstanceBegin => "instance_begin",
            EventKind::InstanceEnd => "instance_end",
            EventKind::SeriesEnd => "series_end",
        }
    }

    fn from_wire(s: &str) -> Option<Self> {
        match s {
            "series_start" => Some(EventKind::SeriesStart),
            "instance_begin" => Some(EventKind::InstanceBegin),
            "instance_end" => Some(EventKind::InstanceEnd),
            "series_end" => Some(EventKind::SeriesEnd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    TimeoutIncumbent,
    TimeoutNofeas,
    Error,
}

impl SolveStatus {
    pub fn wire_name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeoutIncumbent => "timeout_incumbent",
            SolveStatus::TimeoutNofeas => "timeout_nofeas",
            SolveStatus::Error => "error",
        }
    }

    fn from_wire(s: &str) -> Option<Self> {
        match s {
            "optimal" => Some(SolveStatus::Optimal),
            "timeout_incumbent" => Some(SolveStatus::TimeoutIncumbent),
            "timeout_nofeas" => Some(SolveStatus::TimeoutNofeas),
            "error" => Some(SolveStatus::Error),
            _ => None,
        }
    }
}

/// Result fields carried by an `instance_end` event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndPayload {
    #[serde(with = "opt_extreal")]
    pub primal_bound: Option<f64>,
    #[serde(with = "opt_extreal")]
    pub dual_bound: Option<f64>,
    pub status: SolveStatus,
    pub solution_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub kind: EventKind,
    /// 1-based instance index; 0 for series events.
    pub instance_index: u32,
    pub timestamp_monotonic_seconds: f64,
    pub payload: Option<EndPayload>,
}

/// An event as received by the harness, stamped with the harness's own
/// monotonic clock. Per-instance wall times are measured on these receipt
/// stamps, not on the solver-reported timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub event: RunEvent,
    pub harness_seconds: f64,
}

impl RunEvent {
    pub fn series_start(t: f64) -> Self {
        RunEvent { kind: EventKind::SeriesStart, instance_index: 0, timestamp_monotonic_seconds: t, payload: None }
    }

    pub fn series_end(t: f64) -> Self {
        RunEvent { kind: EventKind::SeriesEnd, instance_index: 0, timestamp_monotonic_seconds: t, payload: None }
    }

    pub fn instance_begin(index: u32, t: f64) -> Self {
        RunEvent { kind: EventKind::InstanceBegin, instance_index: index, timestamp_monotonic_seconds: t, payload: None }
    }

    pub fn instance_end(index: u32, t: f64, payload: EndPayload) -> Self {
        RunEvent { kind: EventKind::InstanceEnd, instance_index: index, timestamp_monotonic_seconds: t, payload: Some(payload) }
    }
}

fn format_bound(b: Option<f64>) -> String {
    match b {
        None => "none".to_string(),
        Some(v) if v == f64::INFINITY => "inf".to_string(),
        Some(v) if v == f64::NEG_INFINITY => "-inf".to_string(),
        Some(v) => format!("{v}"),
    }
}

fn parse_bound(tok: &str) -> Result<Option<f64>, String> {
    match tok {
        "none" => Ok(None),
        "inf" => Ok(Some(f64::INFINITY)),
        "-inf" => Ok(Some(f64::NEG_INFINITY)),
        _ => tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Some)
            .ok_or_else(|| format!("bad bound token {tok:?}")),
    }
}

/// Renders an event as its exact wire line (without the newline).
pub fn format_event(event: &RunEvent) -> String {
    let head = format!(
        "EVENT {} {} {}",
        event.kind.wire_name(),
        event.instance_index,
        event.timestamp_monotonic_seconds
    );
    match &event.payload {
        None => head,
        Some(p) => {
            let mut line = format!(
                "{head} {} {} {}",
                format_bound(p.primal_bound),
                format_bound(p.dual_bound),
                p.status.wire_name()
            );
            if let Some(path) = &p.solution_path {
                line.push(' ');
                line.push_str(path);
            }
            line
        }
    }
}

/// Parses one wire line. The error is a plain message; the caller adds the
/// line position.
pub fn parse_event_line(line: &str) -> Result<RunEvent, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.first() != Some(&"EVENT") {
        return Err("line does not start with EVENT".into());
    }
    if toks.len() < 4 {
        return Err("expected: EVENT <kind> <index> <seconds> ...".into());
    }
    let kind = EventKind::from_wire(toks[1]).ok_or_else(|| format!("unknown event kind {:?}", toks[1]))?;
    let instance_index: u32 =
        toks[2].parse().map_err(|_| format!("bad instance index {:?}", toks[2]))?;
    let t: f64 = toks[3]
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| format!("bad timestamp {:?}", toks[3]))?;

    match kind {
        EventKind::InstanceEnd => {
            if !(toks.len() == 7 || toks.len() == 8) {
                return Err("instance_end needs: <pb> <db> <status> [<solution_path>]".into());
            }
            let payload = EndPayload {
                primal_bound: parse_bound(toks[4])?,
                dual_bound: parse_bound(toks[5])?,
                status: SolveStatus::from_wire(toks[6])
                    .ok_or_else(|| format!("unknown status {:?}", toks[6]))?,
                solution_path: toks.get(7).map(|s| s.to_string()),
            };
            if kind == EventKind::InstanceEnd && instance_index == 0 {
                return Err("instance_end with index 0".into());
            }
            Ok(RunEvent::instance_end(instance_index, t, payload))
        }
        _ => {
            if toks.len() != 4 {
                return Err(format!("{} takes no payload", kind.wire_name()));
            }
            match kind {
                EventKind::InstanceBegin if instance_index == 0 => {
                    Err("instance_begin with index 0".into())
                }
                EventKind::SeriesStart | EventKind::SeriesEnd if instance_index != 0 => {
                    Err(format!("{} must use index 0", kind.wire_name()))
                }
                _ => Ok(RunEvent { kind, instance_index, timestamp_monotonic_seconds: t, payload: None }),
            }
        }
    }
}

/// Checks an event log against the sequential protocol. Violations are data,
/// not errors: the empty list means the log is clean.
///
/// A clean log is `series_start`, then for each index `1..=instance_count`
/// in ascending order exactly one `instance_begin` directly followed by its
/// `instance_end`, then `series_end`, with strictly increasing timestamps
/// throughout.
pub fn validate_event_log(events: &[RunEvent], instance_count: u32) -> Vec<String> {
    let mut violations = Vec::new();
    if events.is_empty() {
        violations.push("event log is empty".to_string());
        return violations;
    }

    let mut last_t = f64::NEG_INFINITY;
    for e in events {
        if e.timestamp_monotonic_seconds <= last_t {
            violations.push(format!(
                "timestamps not strictly increasing at {} {} (t = {})",
                e.kind.wire_name(),
                e.instance_index,
                e.timestamp_monotonic_seconds
            ));
        }
        last_t = e.timestamp_monotonic_seconds;
    }

    if events[0].kind != EventKind::SeriesStart {
        violations.push("log does not open with series_start".to_string());
    }
    if events.last().map(|e| e.kind) != Some(EventKind::SeriesEnd) {
        violations.push("log does not close with series_end".to_string());
    }
    for (pos, e) in events.iter().enumerate() {
        let inner = pos != 0 && pos != events.len() - 1;
        if inner && matches!(e.kind, EventKind::SeriesStart | EventKind::SeriesEnd) {
            violations.push(format!("{} appears mid-log", e.kind.wire_name()));
        }
    }

    let mut begun = vec![false; instance_count as usize + 1];
    let mut ended = vec![false; instance_count as usize + 1];
    let mut open: Option<u32> = None;
    let mut last_finalized: u32 = 0;
    for e in events {
        let i = e.instance_index;
        match e.kind {
            EventKind::InstanceBegin => {
                if i == 0 || i > instance_count {
                    violations.push(format!("instance index {i} outside 1..={instance_count}"));
                    continue;
                }
                if begun[i as usize] {
                    violations.push(format!("instance {i} begun twice"));
                }
                if let Some(o) = open {
                    violations.push(format!("instance {i} begun while instance {o} is still open"));
                }
                if i <= last_finalized {
                    violations.push(format!(
                        "instance {i} begun after instance {last_finalized} was finalized; indices must increase"
                    ));
                }
                begun[i as usize] = true;
                open = Some(i);
            }
            EventKind::InstanceEnd => {
                if i == 0 || i > instance_count {
                    violations.push(format!("instance index {i} outside 1..={instance_count}"));
                    continue;
                }
                if ended[i as usize] {
                    violations.push(format!(
                        "instance {i}: result modified after finalization (duplicate instance_end)"
                    ));
                    continue;
                }
                if open != Some(i) {
                    violations.push(format!("instance {i} ended without a matching open begin"));
                } else {
                    open = None;
                }
                ended[i as usize] = true;
                last_finalized = last_finalized.max(i);
            }
            EventKind::SeriesStart | EventKind::SeriesEnd => {}
        }
    }
    if let Some(o) = open {
        violations.push(format!("instance {o} never finalized"));
    }
    for i in 1..=instance_count {
        if !begun[i as usize] || !ended[i as usize] {
            violations.push(format!("instance {i} missing from the log"));
        }
    }
    violations
}
