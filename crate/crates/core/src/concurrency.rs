//! Lifecycle-overlap counting and the concurrency oracles.
//!
//! The refined oracle declares a pair concurrent when the share of
//! overlapping instance observations, 2*|overlaps| / (|A| + |B|), reaches a
//! threshold epsilon. The classic oracle works on directly-follows edge
//! frequencies of the lifecycle-free projection.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::dfg::{Dfg, Pair, RelationMode};
use crate::error::{Error, Result};
use crate::event_log::{pair_lifecycles, ActivityInstance, PairingMode, RefinedLog};

/// Per-pair overlap and co-occurrence statistics.
///
/// `overlap_count` counts instance pairs with overlapping intervals;
/// `cooccur_concurrent_traces` and `exclusive_traces` count trace
/// occurrences (multiset multiplicity included).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConcurrencyStats {
    pub overlap_count: BTreeMap<Pair, u64>,
    pub instance_count: BTreeMap<String, u64>,
    pub cooccur_concurrent_traces: BTreeMap<Pair, u64>,
    pub exclusive_traces: BTreeMap<Pair, u64>,
    pub trace_count: u64,
}

impl ConcurrencyStats {
    pub fn overlaps(&self, a: &str, b: &str) -> u64 {
        *self.overlap_count.get(&Pair::new(a, b)).unwrap_or(&0)
    }

    pub fn instances(&self, label: &str) -> u64 {
        *self.instance_count.get(label).unwrap_or(&0)
    }

    pub fn concurrent_traces(&self, a: &str, b: &str) -> u64 {
        *self
            .cooccur_concurrent_traces
            .get(&Pair::new(a, b))
            .unwrap_or(&0)
    }

    pub fn exclusive(&self, a: &str, b: &str) -> u64 {
        *self.exclusive_traces.get(&Pair::new(a, b)).unwrap_or(&0)
    }

    /// JSON-friendly rendering (pair maps become arrays of records).
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct PairCount<'a> {
            a: &'a str,
            b: &'a str,
            count: u64,
        }
        fn pairs(map: &BTreeMap<Pair, u64>) -> Vec<serde_json::Value> {
            map.iter()
                .map(|(Pair(a, b), count)| {
                    serde_json::to_value(PairCount { a, b, count: *count }).unwrap()
                })
                .collect()
        }
        serde_json::json!({
            "trace_count": self.trace_count,
            "instance_count": self.instance_count,
            "overlap_count": pairs(&self.overlap_count),
            "cooccur_concurrent_traces": pairs(&self.cooccur_concurrent_traces),
            "exclusive_traces": pairs(&self.exclusive_traces),
        })
    }
}

/// Two instances overlap iff each starts strictly before the other ends.
/// Touching at a boundary is sequence, not concurrency.
pub fn intervals_overlap(a: &ActivityInstance, b: &ActivityInstance) -> bool {
    a.start_ts < b.end_ts && b.start_ts < a.end_ts
}

/// Counts lifecycle overlaps and trace-level co-occurrence/exclusivity.
///
/// Overlap counting sweeps instances in start order and compares each new
/// instance against the still-active set.
pub fn count_overlaps(log: &RefinedLog) -> Result<ConcurrencyStats> {
    let mut stats = ConcurrencyStats {
        trace_count: log.traces.len() as u64,
        ..Default::default()
    };
    for trace in &log.traces {
        let instances = pair_lifecycles(trace, PairingMode::Strict)?;
        let mut labels_present: BTreeSet<&str> = BTreeSet::new();
        for instance in &instances {
            *stats.instance_count.entry(instance.label.clone()).or_insert(0) += 1;
            labels_present.insert(&instance.label);
        }
        // Sweep line over instances sorted by start (pair_lifecycles
        // returns them sorted); `active` holds instances whose interval may
        // still overlap later starts.
        let mut active: Vec<&ActivityInstance> = Vec::new();
        let mut overlapping_pairs: BTreeSet<Pair> = BTreeSet::new();
        for instance in &instances {
            active.retain(|open| instance.start_ts < open.end_ts);
            for open in &active {
                if open.label != instance.label {
                    let pair = Pair::new(&open.label, &instance.label);
                    *stats.overlap_count.entry(pair.clone()).or_insert(0) += 1;
                    overlapping_pairs.insert(pair);
                }
            }
            active.push(instance);
        }
        for pair in overlapping_pairs {
            *stats.cooccur_concurrent_traces.entry(pair).or_insert(0) += 1;
        }
        // Exclusivity is relative to the full alphabet.
        for x in &labels_present {
            for y in &log.alphabet {
                if !labels_present.contains(y.as_str()) {
                    *stats
                        .exclusive_traces
                        .entry(Pair::new(*x, y.as_str()))
                        .or_insert(0) += 1;
                }
            }
        }
    }
    Ok(stats)
}

/// The set of activity pairs deemed concurrent at a given threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrencyRelation {
    pub pairs: BTreeSet<Pair>,
    pub epsilon: f64,
}

impl ConcurrencyRelation {
    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&Pair::new(a, b))
    }
}

/// Refined oracle: pair {A,B} is concurrent iff
/// 2*|overlaps| / (|A| + |B|) >= epsilon, the pair is not a short-loop
/// candidate, and neither activity is a self-loop.
pub fn refined_concurrency(
    stats: &ConcurrencyStats,
    dfg: &Dfg,
    epsilon: f64,
) -> Result<ConcurrencyRelation> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let labels: Vec<&String> = stats.instance_count.keys().collect();
    let mut pairs = BTreeSet::new();
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            let pair = Pair::new(a.as_str(), b.as_str());
            if dfg.self_loops.contains(a.as_str()) || dfg.self_loops.contains(b.as_str()) {
                continue;
            }
            if dfg.short_loops.contains(&pair) {
                continue;
            }
            let overlaps = stats.overlaps(a, b) as f64;
            let denom = (stats.instances(a) + stats.instances(b)) as f64;
            if denom > 0.0 && 2.0 * overlaps / denom >= epsilon {
                pairs.insert(pair);
            }
        }
    }
    Ok(ConcurrencyRelation { pairs, epsilon })
}

/// Classic oracle on directly-follows frequencies: both edges present,
/// no short-loop pattern, and a balance ratio strictly below epsilon.
pub fn classic_concurrency(
    dfg: &Dfg,
    log: &RefinedLog,
    epsilon: f64,
) -> Result<ConcurrencyRelation> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    debug_assert_eq!(dfg.mode, RelationMode::Classic);
    let mut short_loop_pairs: BTreeSet<Pair> = BTreeSet::new();
    for trace in &log.traces {
        let projected = trace.end_projection();
        for window in projected.windows(3) {
            if window[0] == window[2] && window[0] != window[1] {
                short_loop_pairs.insert(Pair::new(window[0], window[1]));
            }
        }
    }
    let self_loops: BTreeSet<&str> = dfg
        .edges
        .keys()
        .filter(|(a, b)| a == b)
        .map(|(a, _)| a.as_str())
        .collect();
    let labels: Vec<&String> = dfg.nodes.iter().collect();
    let mut pairs = BTreeSet::new();
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            if self_loops.contains(a.as_str()) || self_loops.contains(b.as_str()) {
                continue;
            }
            let ab = *dfg.edges.get(&((*a).clone(), (*b).clone())).unwrap_or(&0);
            let ba = *dfg.edges.get(&((*b).clone(), (*a).clone())).unwrap_or(&0);
            if ab == 0 || ba == 0 {
                continue;
            }
            let pair = Pair::new(a.as_str(), b.as_str());
            if short_loop_pairs.contains(&pair) {
                continue;
            }
            let ratio = (ab as f64 - ba as f64).abs() / (ab + ba) as f64;
            if ratio < epsilon {
                pairs.insert(pair);
            }
        }
    }
    Ok(ConcurrencyRelation { pairs, epsilon })
}

/// Removes both directed edges of every concurrent pair; the result is the
/// pruned DFG consumed by filtering.
pub fn prune_dfg(dfg: &Dfg, relation: &ConcurrencyRelation) -> Dfg {
    let mut pruned = dfg.clone();
    for Pair(a, b) in &relation.pairs {
        pruned.edges.remove(&(a.clone(), b.clone()));
        pruned.edges.remove(&(b.clone(), a.clone()));
    }
    pruned
}
