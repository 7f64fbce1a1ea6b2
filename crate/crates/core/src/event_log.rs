//! Lifecycle event logs: events, traces, and activity instances.
//!
//! A refined log records two events per activity execution (a start and an
//! end), grouped into traces by case id and ordered by timestamp. Pairing
//! start/end events yields activity instances, the time intervals all
//! concurrency reasoning is based on.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lifecycle state of an activity execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Start,
    End,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Start => write!(f, "start"),
            Phase::End => write!(f, "end"),
        }
    }
}

impl Phase {
    /// Normalizes a lifecycle transition value, case-insensitively.
    /// "start" maps to `Start`; "complete" and "end" map to `End`.
    pub fn parse(value: &str) -> Option<Phase> {
        match value.trim().to_ascii_lowercase().as_str() {
            "start" => Some(Phase::Start),
            "complete" | "end" => Some(Phase::End),
            _ => None,
        }
    }
}

/// One lifecycle event: an activity label, a phase, and a timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    pub phase: Phase,
    pub timestamp: DateTime<Utc>,
}

/// A chronologically ordered sequence of events sharing one case id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    /// Labels of end events in order; the projection used by the classic
    /// log definition when lifecycle information is dropped.
    pub fn end_projection(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| e.phase == Phase::End)
            .map(|e| e.label.as_str())
            .collect()
    }
}

/// A multiset of traces plus the activity alphabet observed in them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedLog {
    pub traces: Vec<Trace>,
    pub alphabet: BTreeSet<String>,
}

impl RefinedLog {
    pub fn new(traces: Vec<Trace>) -> Result<RefinedLog> {
        if traces.is_empty() {
            return Err(Error::EmptyLog);
        }
        let alphabet = traces
            .iter()
            .flat_map(|t| t.events.iter().map(|e| e.label.clone()))
            .collect();
        Ok(RefinedLog { traces, alphabet })
    }

    pub fn total_events(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    /// Serializes the log back to CSV with the canonical header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,activity,lifecycle,timestamp\n");
        for trace in &self.traces {
            for e in &trace.events {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    csv_field(&trace.case_id),
                    csv_field(&e.label),
                    e.phase,
                    e.timestamp.format("%Y-%m-%dT%H:%M:%S%.3fZ")
                ));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A paired (start, end) interval of one activity execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityInstance {
    pub label: String,
    pub start_ts: DateTime<Utc>,
    pub end_ts: DateTime<Utc>,
    /// True when an orphan event was completed into a zero-duration
    /// instance by repair-mode pairing.
    pub repaired: bool,
}

/// Pairing policy for start/end events within a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    /// Every start must match a later end of the same label.
    Strict,
    /// Orphan events become zero-duration instances, flagged.
    Repair,
}

/// Matches start events to end events of the same label, FIFO: each start
/// is paired with the earliest subsequent unmatched end.
pub fn pair_lifecycles(trace: &Trace, mode: PairingMode) -> Result<Vec<ActivityInstance>> {
    let mut open: std::collections::BTreeMap<&str, VecDeque<&Event>> =
        std::collections::BTreeMap::new();
    let mut instances = Vec::with_capacity(trace.events.len() / 2);
    for event in &trace.events {
        match event.phase {
            Phase::Start => open.entry(&event.label).or_default().push_back(event),
            Phase::End => {
                let queue = open.entry(&event.label).or_default();
                match queue.pop_front() {
                    Some(start) => instances.push(ActivityInstance {
                        label: event.label.clone(),
                        start_ts: start.timestamp,
                        end_ts: event.timestamp,
                        repaired: false,
                    }),
                    None => match mode {
                        PairingMode::Strict => {
                            return Err(unmatched(trace, event));
                        }
                        PairingMode::Repair => instances.push(ActivityInstance {
                            label: event.label.clone(),
                            start_ts: event.timestamp,
                            end_ts: event.timestamp,
                            repaired: true,
                        }),
                    },
                }
            }
        }
    }
    for (_, queue) in open {
        for start in queue {
            match mode {
                PairingMode::Strict => return Err(unmatched(trace, start)),
                PairingMode::Repair => instances.push(ActivityInstance {
                    label: start.label.clone(),
                    start_ts: start.timestamp,
                    end_ts: start.timestamp,
                    repaired: true,
                }),
            }
        }
    }
    instances.sort_by(|a, b| {
        (a.start_ts, a.end_ts, a.label.as_str()).cmp(&(b.start_ts, b.end_ts, b.label.as_str()))
    });
    Ok(instances)
}

fn unmatched(trace: &Trace, event: &Event) -> Error {
    Error::UnmatchedLifecycle {
        phase: event.phase.to_string(),
        label: event.label.clone(),
        case_id: trace.case_id.clone(),
        timestamp: event.timestamp.to_rfc3339(),
    }
}
