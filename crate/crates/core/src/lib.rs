//! Process discovery from lifecycle event logs.
//!
//! The pipeline goes: parse a CSV/XES log with start/end lifecycle events,
//! build a directly-follows graph that respects activity intervals, detect
//! truly concurrent activity pairs from interval overlaps, prune and
//! filter the graph, and synthesize a BPMN model with XOR/AND/OR gateways.
//! Companion modules verify soundness, compute simplicity metrics, and
//! generate synthetic test logs from a model.

pub mod bpmn;
pub mod concurrency;
pub mod dfg;
pub mod error;
pub mod event_log;
pub mod filter;
pub mod metrics;
pub mod parse;
pub mod pipeline;
pub mod simulate;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
