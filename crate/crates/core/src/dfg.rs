//! Directly-follows graph construction under three relation variants, plus
//! self-loop and short-loop annotation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::event_log::{Phase, RefinedLog};

/// An unordered activity pair, stored lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair(pub String, pub String);

impl Pair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Pair {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Pair(a, b)
        } else {
            Pair(b, a)
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0 == label || self.1 == label
    }
}

/// Which directly-follows relation the graph encodes.
///
/// `Classic` reads every event as an occurrence of its activity (lifecycle
/// information discarded). `Imlc` relates any two lifecycle events with no
/// complete third-party lifecycle strictly between them. `Refined` requires
/// a start after an end with no end event strictly between; the discovery
/// pipeline consumes this variant exclusively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationMode {
    Classic,
    Imlc,
    Refined,
}

/// Directed graph over activity labels with edge frequencies, loop
/// annotations, and artificial source/sink connections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfg {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), u64>,
    pub source_edges: BTreeMap<String, u64>,
    pub sink_edges: BTreeMap<String, u64>,
    pub self_loops: BTreeSet<String>,
    pub short_loops: BTreeSet<Pair>,
    pub mode: RelationMode,
}

impl Dfg {
    pub fn edge_set(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .keys()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect()
    }

    pub fn successors(&self, node: &str) -> BTreeSet<&str> {
        self.edges
            .range((node.to_string(), String::new())..)
            .take_while(|((a, _), _)| a == node)
            .map(|((_, b), _)| b.as_str())
            .collect()
    }

    /// DOT rendering with frequencies as edge labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfg {\n  rankdir=LR;\n");
        out.push_str("  __source [shape=circle, label=\"\"];\n");
        out.push_str("  __sink [shape=doublecircle, label=\"\"];\n");
        for node in &self.nodes {
            let deco = if self.self_loops.contains(node) {
                ", peripheries=2"
            } else {
                ""
            };
            let _ = writeln!(out, "  {:?} [shape=box{}];", node, deco);
        }
        for (target, freq) in &self.source_edges {
            let _ = writeln!(out, "  __source -> {:?} [label=\"{}\"];", target, freq);
        }
        for ((a, b), freq) in &self.edges {
            let style = if self
                .short_loops
                .contains(&Pair::new(a.clone(), b.clone()))
            {
                ", style=dashed"
            } else {
                ""
            };
            let _ = writeln!(out, "  {:?} -> {:?} [label=\"{}\"{}];", a, b, freq, style);
        }
        for (origin, freq) in &self.sink_edges {
            let _ = writeln!(out, "  {:?} -> __sink [label=\"{}\"];", origin, freq);
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the directly-follows graph of `log` under the given relation
/// variant, with artificial source/sink edges from each trace's first and
/// last event labels.
pub fn build_dfg(log: &RefinedLog, mode: RelationMode) -> Result<Dfg> {
    if log.traces.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut dfg = Dfg {
        nodes: log.alphabet.clone(),
        edges: BTreeMap::new(),
        source_edges: BTreeMap::new(),
        sink_edges: BTreeMap::new(),
        self_loops: BTreeSet::new(),
        short_loops: BTreeSet::new(),
        mode,
    };
    for trace in &log.traces {
        if trace.events.is_empty() {
            continue;
        }
        let first = trace.events.first().unwrap().label.clone();
        let last = trace.events.last().unwrap().label.clone();
        *dfg.source_edges.entry(first).or_insert(0) += 1;
        *dfg.sink_edges.entry(last).or_insert(0) += 1;
        match mode {
            RelationMode::Classic => {
                for window in trace.events.windows(2) {
                    let key = (window[0].label.clone(), window[1].label.clone());
                    *dfg.edges.entry(key).or_insert(0) += 1;
                }
            }
            RelationMode::Refined => {
                // After each end event of x, every start yields x -> y
                // until some instance completes entirely inside the
                // window (i.e. it both started and ended after x ended).
                let events = &trace.events;
                for (i, e) in events.iter().enumerate() {
                    if e.phase != Phase::End {
                        continue;
                    }
                    let mut opened: BTreeSet<&str> = BTreeSet::new();
                    for follower in &events[i + 1..] {
                        match follower.phase {
                            Phase::End => {
                                if opened.contains(follower.label.as_str()) {
                                    break;
                                }
                            }
                            Phase::Start => {
                                let key = (e.label.clone(), follower.label.clone());
                                *dfg.edges.entry(key).or_insert(0) += 1;
                                opened.insert(&follower.label);
                            }
                        }
                    }
                }
            }
            RelationMode::Imlc => {
                let events = &trace.events;
                for i in 0..events.len() {
                    'follower: for j in i + 1..events.len() {
                        if events[i].label == events[j].label {
                            continue;
                        }
                        // Reject if a complete lifecycle lies strictly
                        // between positions i and j.
                        let mut open: BTreeSet<&str> = BTreeSet::new();
                        for e in &events[i + 1..j] {
                            match e.phase {
                                Phase::Start => {
                                    open.insert(&e.label);
                                }
                                Phase::End => {
                                    if open.contains(e.label.as_str()) {
                                        continue 'follower;
                                    }
                                }
                            }
                        }
                        let key = (events[i].label.clone(), events[j].label.clone());
                        *dfg.edges.entry(key).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(dfg)
}

/// Builds a classic DFG over the end-event projection of each trace
/// (lifecycle information dropped, one occurrence per activity execution).
/// This is the input expected by the classic concurrency oracle.
pub fn build_projected_dfg(log: &RefinedLog) -> Result<Dfg> {
    if log.traces.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut dfg = Dfg {
        nodes: log.alphabet.clone(),
        edges: BTreeMap::new(),
        source_edges: BTreeMap::new(),
        sink_edges: BTreeMap::new(),
        self_loops: BTreeSet::new(),
        short_loops: BTreeSet::new(),
        mode: RelationMode::Classic,
    };
    for trace in &log.traces {
        let projected = trace.end_projection();
        if projected.is_empty() {
            continue;
        }
        *dfg.source_edges.entry(projected[0].to_string()).or_insert(0) += 1;
        *dfg
            .sink_edges
            .entry(projected[projected.len() - 1].to_string())
            .or_insert(0) += 1;
        for window in projected.windows(2) {
            let key = (window[0].to_string(), window[1].to_string());
            *dfg.edges.entry(key).or_insert(0) += 1;
        }
    }
    Ok(dfg)
}

/// Annotates a refined-mode DFG with self-loops and short-loop candidates.
///
/// Self-loops are nodes with an `x -> x` edge (the edge is removed and kept
/// as an annotation). Short-loop candidates are unordered pairs whose
/// end-event projection contains the pattern `x, y, x` in some trace; the
/// concurrency oracle later refuses to mark such a pair concurrent, both
/// directed edges stay in the graph.
pub fn discover_loops(mut dfg: Dfg, log: &RefinedLog) -> Dfg {
    let self_loop_keys: Vec<_> = dfg
        .edges
        .keys()
        .filter(|(a, b)| a == b)
        .cloned()
        .collect();
    for key in self_loop_keys {
        dfg.edges.remove(&key);
        dfg.self_loops.insert(key.0);
    }
    for trace in &log.traces {
        let projected = trace.end_projection();
        for window in projected.windows(3) {
            if window[0] == window[2] && window[0] != window[1] {
                dfg.short_loops.insert(Pair::new(window[0], window[1]));
            }
        }
    }
    dfg
}
