//! Infrequent-edge filtering of the pruned DFG.
//!
//! Three rules: (a) every node keeps its most frequent incoming and
//! outgoing edge, (b) remaining edges survive iff their frequency reaches
//! the eta-quantile of the forced-set frequencies, (c) connectivity from
//! source to sink through every node is repaired by re-adding removed
//! edges, highest frequency first.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::dfg::Dfg;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FilterConfig {
    /// Percentile in [0,1] for the edge-frequency cutoff.
    pub eta: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { eta: 0.4 }
    }
}

/// Node handle covering the artificial source/sink alongside activities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum FNode {
    Source,
    Act(String),
    Sink,
}

type FEdge = (FNode, FNode);

fn unify(dfg: &Dfg) -> BTreeMap<FEdge, u64> {
    let mut edges = BTreeMap::new();
    for (target, freq) in &dfg.source_edges {
        edges.insert((FNode::Source, FNode::Act(target.clone())), *freq);
    }
    for ((a, b), freq) in &dfg.edges {
        edges.insert((FNode::Act(a.clone()), FNode::Act(b.clone())), *freq);
    }
    for (origin, freq) in &dfg.sink_edges {
        edges.insert((FNode::Act(origin.clone()), FNode::Sink), *freq);
    }
    edges
}

fn reachable(edges: &BTreeSet<FEdge>, from: &FNode, forward: bool) -> BTreeSet<FNode> {
    let mut seen: BTreeSet<FNode> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(from.clone());
    queue.push_back(from.clone());
    while let Some(node) = queue.pop_front() {
        for (a, b) in edges.iter() {
            let (tail, head) = if forward { (a, b) } else { (b, a) };
            if tail == &node && !seen.contains(head) {
                seen.insert(head.clone());
                queue.push_back(head.clone());
            }
        }
    }
    seen
}

/// Applies the three filtering rules; see module docs. Fails if some node
/// has no incident edges at all and thus can never lie on a source-to-sink
/// path.
pub fn filter_dfg(pdfg: &Dfg, config: &FilterConfig) -> Result<Dfg> {
    if !(0.0..=1.0).contains(&config.eta) || config.eta.is_nan() {
        return Err(Error::EtaOutOfRange(config.eta));
    }
    let all_edges = unify(pdfg);

    // Isolated nodes cannot be repaired.
    for node in &pdfg.nodes {
        let handle = FNode::Act(node.clone());
        let touched = all_edges
            .keys()
            .any(|(a, b)| a == &handle || b == &handle);
        if !touched {
            return Err(Error::DisconnectedNode(node.clone()));
        }
    }

    // Rule (a): most frequent incoming/outgoing edge per node; ties break
    // toward the lexicographically smallest edge.
    let mut forced: BTreeSet<FEdge> = BTreeSet::new();
    let mut nodes: Vec<FNode> = vec![FNode::Source, FNode::Sink];
    nodes.extend(pdfg.nodes.iter().map(|n| FNode::Act(n.clone())));
    for node in &nodes {
        let best_out = all_edges
            .iter()
            .filter(|((a, _), _)| a == node)
            .max_by(|(e1, f1), (e2, f2)| f1.cmp(f2).then_with(|| e2.cmp(e1)));
        if let Some((edge, _)) = best_out {
            forced.insert(edge.clone());
        }
        let best_in = all_edges
            .iter()
            .filter(|((_, b), _)| b == node)
            .max_by(|(e1, f1), (e2, f2)| f1.cmp(f2).then_with(|| e2.cmp(e1)));
        if let Some((edge, _)) = best_in {
            forced.insert(edge.clone());
        }
    }

    // Rule (b): nearest-rank eta-quantile over forced-edge frequencies.
    let mut forced_freqs: Vec<u64> = forced.iter().map(|e| all_edges[e]).collect();
    forced_freqs.sort_unstable();
    let cutoff = if forced_freqs.is_empty() {
        0
    } else {
        let rank = ((config.eta * forced_freqs.len() as f64).ceil() as usize).max(1);
        forced_freqs[rank.min(forced_freqs.len()) - 1]
    };

    let mut kept: BTreeSet<FEdge> = forced.clone();
    for (edge, freq) in &all_edges {
        if *freq >= cutoff {
            kept.insert(edge.clone());
        }
    }

    // Rule (c): repair reachability by re-adding removed edges, frequency
    // descending, lexicographic on ties.
    let mut removed: Vec<FEdge> = all_edges
        .keys()
        .filter(|e| !kept.contains(*e))
        .cloned()
        .collect();
    removed.sort_by(|a, b| all_edges[b].cmp(&all_edges[a]).then_with(|| a.cmp(b)));

    loop {
        let reach = reachable(&kept, &FNode::Source, true);
        let coreach = reachable(&kept, &FNode::Sink, false);
        let ok = nodes
            .iter()
            .all(|n| reach.contains(n) && coreach.contains(n));
        if ok {
            break;
        }
        let mut progressed = false;
        for (idx, edge) in removed.iter().enumerate() {
            let mut candidate = kept.clone();
            candidate.insert(edge.clone());
            let r2 = reachable(&candidate, &FNode::Source, true);
            let c2 = reachable(&candidate, &FNode::Sink, false);
            if r2.len() + c2.len() > reach.len() + coreach.len() {
                kept = candidate;
                removed.remove(idx);
                progressed = true;
                break;
            }
        }
        if !progressed {
            let stuck = nodes
                .iter()
                .find(|n| !reach.contains(n) || !coreach.contains(n))
                .unwrap();
            let name = match stuck {
                FNode::Act(s) => s.clone(),
                FNode::Source => "source".to_string(),
                FNode::Sink => "sink".to_string(),
            };
            return Err(Error::DisconnectedNode(name));
        }
    }

    // Reassemble the Dfg.
    let mut filtered = pdfg.clone();
    filtered.edges.clear();
    filtered.source_edges.clear();
    filtered.sink_edges.clear();
    for edge in &kept {
        let freq = all_edges[edge];
        match edge {
            (FNode::Source, FNode::Act(t)) => {
                filtered.source_edges.insert(t.clone(), freq);
            }
            (FNode::Act(a), FNode::Act(b)) => {
                filtered.edges.insert((a.clone(), b.clone()), freq);
            }
            (FNode::Act(o), FNode::Sink) => {
                filtered.sink_edges.insert(o.clone(), freq);
            }
            _ => {}
        }
    }
    Ok(filtered)
}
