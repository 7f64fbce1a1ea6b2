//! BPMN synthesis from a filtered directly-follows graph and a
//! concurrency relation.
//!
//! Splits are discovered per node by repeatedly merging successor groups:
//! successors with identical "future" sets (the concurrent partners they
//! still expect) fold into an XOR branch set, and groups that mutually
//! appear in each other's futures fold into an AND block. Joins are then
//! placed by grouping each merge point's predecessors under their nearest
//! shared split gateway, walking a dominator tree of the loop-free graph.
//! Cycle edges never enter split trees; they get dedicated XOR gateways.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::dominators;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::bpmn::{sanitize_id, BpmnModel, GatewayDirection, GatewayKind, Node, NodeId};
use crate::concurrency::{ConcurrencyRelation, ConcurrencyStats};
use crate::dfg::Dfg;
use crate::error::{Error, Result};

/// Back edges of a directed graph over index-labelled nodes, found by
/// depth-first search from `root` (successors visited in ascending index
/// order, so the result is deterministic). Self-edges always count.
fn dfs_back_edges(n: usize, edges: &BTreeSet<(usize, usize)>, root: usize) -> BTreeSet<(usize, usize)> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[*a].push(*b);
    }
    let mut color = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
    let mut back = BTreeSet::new();
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    color[root] = 1;
    while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
        if *pos < adj[node].len() {
            let succ = adj[node][*pos];
            *pos += 1;
            match color[succ] {
                0 => {
                    color[succ] = 1;
                    stack.push((succ, 0));
                }
                1 => {
                    back.insert((node, succ));
                }
                _ => {}
            }
        } else {
            color[node] = 2;
            stack.pop();
        }
    }
    back
}

/// One branch under construction during split discovery.
#[derive(Debug, Clone)]
enum SplitTree {
    Leaf(String),
    End,
    Gate(GatewayKind, Vec<SplitTree>),
}

struct Unit {
    tree: SplitTree,
    cover: BTreeSet<String>,
    future: BTreeSet<String>,
}

/// Builds the gateway tree over a task's direct successors. `succs` holds
/// activity labels; `None` stands for the routing to the end event.
fn build_split_tree(succs: &[Option<String>], relation: &ConcurrencyRelation) -> SplitTree {
    let labels: BTreeSet<String> = succs.iter().flatten().cloned().collect();
    let mut units: Vec<Unit> = succs
        .iter()
        .map(|s| match s {
            Some(l) => Unit {
                tree: SplitTree::Leaf(l.clone()),
                cover: [l.clone()].into(),
                future: labels
                    .iter()
                    .filter(|o| relation.contains(l, o))
                    .cloned()
                    .collect(),
            },
            None => Unit {
                tree: SplitTree::End,
                cover: BTreeSet::new(),
                future: BTreeSet::new(),
            },
        })
        .collect();

    while units.len() > 1 {
        // exclusive branches: identical futures
        let mut by_future: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
        for (i, u) in units.iter().enumerate() {
            by_future
                .entry(u.future.iter().cloned().collect())
                .or_default()
                .push(i);
        }
        if let Some((_, group)) = by_future.iter().find(|(_, g)| g.len() > 1) {
            units = merge_units(units, group, GatewayKind::Xor, |q| {
                q[0].future.clone()
            });
            continue;
        }

        // concurrent branches: each group member's cover lies in every
        // other member's future
        let compatible = |a: &Unit, b: &Unit| {
            !a.cover.is_empty()
                && !b.cover.is_empty()
                && a.cover.is_subset(&b.future)
                && b.cover.is_subset(&a.future)
        };
        let mut best: Vec<usize> = Vec::new();
        for seed in 0..units.len() {
            let mut clique = vec![seed];
            for cand in 0..units.len() {
                if cand != seed
                    && clique
                        .iter()
                        .all(|&m| compatible(&units[m], &units[cand]))
                {
                    clique.push(cand);
                }
            }
            if clique.len() > best.len() {
                best = clique;
            }
        }
        if best.len() > 1 {
            best.sort_unstable();
            units = merge_units(units, &best, GatewayKind::And, |q| {
                let mut future = q[0].future.clone();
                for u in &q[1..] {
                    future = future.intersection(&u.future).cloned().collect();
                }
                let cover: BTreeSet<String> =
                    q.iter().flat_map(|u| u.cover.iter().cloned()).collect();
                future.difference(&cover).cloned().collect()
            });
            continue;
        }

        // no structure found: fold everything into one exclusive choice
        let all: Vec<usize> = (0..units.len()).collect();
        units = merge_units(units, &all, GatewayKind::Xor, |_| BTreeSet::new());
    }
    units.pop().unwrap().tree
}

fn merge_units(
    units: Vec<Unit>,
    group: &[usize],
    kind: GatewayKind,
    future_of: impl Fn(&[Unit]) -> BTreeSet<String>,
) -> Vec<Unit> {
    let picked: BTreeSet<usize> = group.iter().copied().collect();
    let mut merged: Vec<Unit> = Vec::new();
    let mut rest: Vec<Unit> = Vec::new();
    for (i, u) in units.into_iter().enumerate() {
        if picked.contains(&i) {
            merged.push(u);
        } else {
            rest.push(u);
        }
    }
    let future = future_of(&merged);
    let cover: BTreeSet<String> = merged
        .iter()
        .flat_map(|u| u.cover.iter().cloned())
        .collect();
    let mut children = Vec::new();
    for u in merged {
        match u.tree {
            SplitTree::Gate(k, sub) if k == kind => children.extend(sub),
            t => children.push(t),
        }
    }
    rest.push(Unit {
        tree: SplitTree::Gate(kind, children),
        cover,
        future,
    });
    rest
}

struct Builder {
    model: BpmnModel,
    back_flows: BTreeSet<(NodeId, NodeId)>,
    counter: usize,
}

impl Builder {
    fn gateway(&mut self, kind: GatewayKind, direction: GatewayDirection) -> NodeId {
        self.counter += 1;
        let k = match kind {
            GatewayKind::Xor => "xor",
            GatewayKind::And => "and",
            GatewayKind::Or => "or",
        };
        let d = match direction {
            GatewayDirection::Split => "split",
            GatewayDirection::Join => "join",
        };
        let id = format!("{k}_{d}_{}", self.counter);
        self.model.add_node(id.clone(), Node::Gateway { kind, direction });
        id
    }

    fn materialize(&mut self, tree: &SplitTree, entry: &BTreeMap<String, NodeId>) -> NodeId {
        match tree {
            SplitTree::Leaf(l) => entry[l].clone(),
            SplitTree::End => "end".to_string(),
            SplitTree::Gate(kind, children) => {
                let g = self.gateway(*kind, GatewayDirection::Split);
                for child in children {
                    let target = self.materialize(child, entry);
                    self.model.add_flow(g.clone(), target);
                }
                g
            }
        }
    }
}

/// Turns the filtered graph into a BPMN model with split and join
/// gateways. Loops become explicit back flows guarded by XOR gateways.
pub fn synthesize(dfg: &Dfg, relation: &ConcurrencyRelation) -> Result<BpmnModel> {
    let mut b = Builder {
        model: BpmnModel::default(),
        back_flows: BTreeSet::new(),
        counter: 0,
    };
    b.model.add_node("start", Node::StartEvent);
    b.model.add_node("end", Node::EndEvent);

    // stable task ids, disambiguated if sanitizing collides
    let mut task_id: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut used: BTreeSet<NodeId> = BTreeSet::new();
    for label in &dfg.nodes {
        let mut id = format!("task_{}", sanitize_id(label));
        let mut n = 1;
        while used.contains(&id) {
            n += 1;
            id = format!("task_{}_{n}", sanitize_id(label));
        }
        used.insert(id.clone());
        task_id.insert(label.clone(), id.clone());
        b.model.add_node(id, Node::Task { name: label.clone() });
    }

    // index the label graph: 0 = source, 1.. = activities, last = sink
    let labels: Vec<&String> = dfg.nodes.iter().collect();
    let idx_of: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i + 1))
        .collect();
    let sink = labels.len() + 1;
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for t in dfg.source_edges.keys() {
        edges.insert((0, idx_of[t.as_str()]));
    }
    for (a, b2) in dfg.edges.keys() {
        edges.insert((idx_of[a.as_str()], idx_of[b2.as_str()]));
    }
    for l in &dfg.self_loops {
        if let Some(&i) = idx_of.get(l.as_str()) {
            edges.insert((i, i));
        }
    }
    for o in dfg.sink_edges.keys() {
        edges.insert((idx_of[o.as_str()], sink));
    }
    let back = dfs_back_edges(sink + 1, &edges, 0);

    // split phase: route each node's outgoing edges
    for u in 0..=labels.len() {
        let exit: NodeId = if u == 0 {
            "start".into()
        } else {
            task_id[labels[u - 1].as_str()].clone()
        };
        let mut fwd: Vec<Option<String>> = Vec::new();
        let mut backs: Vec<String> = Vec::new();
        for (a, t) in &edges {
            if *a != u {
                continue;
            }
            if back.contains(&(*a, *t)) {
                backs.push(labels[*t - 1].clone());
            } else if *t == sink {
                fwd.push(None);
            } else {
                fwd.push(Some(labels[*t - 1].clone()));
            }
        }
        if fwd.is_empty() && backs.is_empty() {
            return Err(Error::InvalidModel(format!(
                "node '{exit}' has no outgoing edges"
            )));
        }
        let fwd_entry = match fwd.len() {
            0 => None,
            1 => Some(match &fwd[0] {
                Some(l) => task_id[l.as_str()].clone(),
                None => "end".to_string(),
            }),
            _ => {
                let tree = build_split_tree(&fwd, relation);
                Some(b.materialize(&tree, &task_id))
            }
        };
        if backs.is_empty() {
            b.model.add_flow(exit, fwd_entry.unwrap());
        } else if backs.len() == 1 && fwd_entry.is_none() {
            let t = task_id[backs[0].as_str()].clone();
            b.model.add_flow(exit.clone(), t.clone());
            b.back_flows.insert((exit, t));
        } else {
            let bs = b.gateway(GatewayKind::Xor, GatewayDirection::Split);
            b.model.add_flow(exit, bs.clone());
            for t in &backs {
                let t = task_id[t.as_str()].clone();
                b.model.add_flow(bs.clone(), t.clone());
                b.back_flows.insert((bs.clone(), t));
            }
            if let Some(f) = fwd_entry {
                b.model.add_flow(bs, f);
            }
        }
    }

    insert_joins(&mut b, relation)?;

    let paired: BTreeSet<&NodeId> = b.model.gateway_pairs.keys().collect();
    b.model.unpaired_splits = b
        .model
        .nodes
        .iter()
        .filter(|(id, n)| {
            matches!(n, Node::Gateway { direction: GatewayDirection::Split, .. })
                && !paired.contains(id)
        })
        .map(|(id, _)| id.clone())
        .collect();
    b.model.validate()?;
    Ok(b.model)
}

/// Groups every merge point's forward predecessors under shared split
/// gateways (deepest first) and inserts matching joins; cycle re-entries
/// get an XOR join after the forward merge.
fn insert_joins(b: &mut Builder, relation: &ConcurrencyRelation) -> Result<()> {
    // dominator tree of the loop-free graph
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let mut gidx: BTreeMap<NodeId, NodeIndex> = BTreeMap::new();
    for id in b.model.nodes.keys() {
        gidx.insert(id.clone(), graph.add_node(()));
    }
    for (x, y) in &b.model.flows {
        if !b.back_flows.contains(&(x.clone(), y.clone())) {
            graph.add_edge(gidx[x], gidx[y], ());
        }
    }
    let dom = dominators::simple_fast(&graph, gidx["start"]);
    let rev: BTreeMap<NodeIndex, &NodeId> = gidx.iter().map(|(k, v)| (*v, k)).collect();
    let splits: BTreeSet<NodeId> = b
        .model
        .nodes
        .iter()
        .filter(|(_, n)| {
            matches!(n, Node::Gateway { direction: GatewayDirection::Split, .. })
        })
        .map(|(id, _)| id.clone())
        .collect();
    // dominator chains (nearest enclosing split gateways, deepest first)
    // and dominator-tree depths, fixed before any join is inserted
    let mut chains: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut depths: BTreeMap<NodeId, usize> = BTreeMap::new();
    let start_idx = gidx["start"];
    for id in b.model.nodes.keys() {
        let mut chain = Vec::new();
        if splits.contains(id) {
            chain.push(id.clone());
        }
        let mut cur = gidx[id];
        let mut depth = 0;
        while cur != start_idx {
            let d = dom.immediate_dominator(cur).ok_or_else(|| {
                Error::InvalidModel(format!("node '{}' unreachable from start", rev[&cur]))
            })?;
            depth += 1;
            if splits.contains(rev[&d]) {
                chain.push(rev[&d].clone());
            }
            cur = d;
        }
        chains.insert(id.clone(), chain);
        depths.insert(id.clone(), depth);
    }

    let merge_targets: Vec<NodeId> = b
        .model
        .nodes
        .keys()
        .filter(|id| {
            let fwd_in = b
                .model
                .predecessors(id)
                .iter()
                .filter(|p| !b.back_flows.contains(&((*(*p)).clone(), (*id).clone())))
                .count();
            let back_in = b.model.predecessors(id).len() - fwd_in;
            fwd_in >= 2 || (back_in >= 1 && fwd_in >= 1)
        })
        .cloned()
        .collect();

    for n in merge_targets {
        let preds: Vec<NodeId> = b.model.predecessors(&n).iter().map(|p| (*p).clone()).collect();
        let mut fwd_units: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
        let mut back_srcs: Vec<NodeId> = Vec::new();
        for p in preds {
            if b.back_flows.contains(&(p.clone(), n.clone())) {
                back_srcs.push(p);
            } else {
                let chain = chains[&p].clone();
                fwd_units.push((p, chain));
            }
        }
        for (p, _) in &fwd_units {
            b.model.flows.remove(&(p.clone(), n.clone()));
        }

        while fwd_units.len() > 1 {
            // deepest split gateway shared by at least two branches
            let mut counts: BTreeMap<&NodeId, Vec<usize>> = BTreeMap::new();
            for (i, (_, chain)) in fwd_units.iter().enumerate() {
                for g in chain {
                    counts.entry(g).or_default().push(i);
                }
            }
            let best = counts
                .into_iter()
                .filter(|(_, v)| v.len() > 1)
                .max_by(|(g1, _), (g2, _)| {
                    depths[*g1].cmp(&depths[*g2]).then_with(|| g2.cmp(g1))
                });
            let (q, mut kind, next_chain, closed_split) = match best {
                Some((g, members)) => {
                    let outdeg = b.model.successors(g).len();
                    let closed = members.len() == outdeg;
                    let split_kind = match b.model.nodes.get(g) {
                        Some(Node::Gateway { kind, .. }) => *kind,
                        _ => GatewayKind::Xor,
                    };
                    let kind = if closed {
                        split_kind
                    } else if split_kind == GatewayKind::Xor {
                        // a strict subset of exclusive branches still
                        // carries at most one token
                        GatewayKind::Xor
                    } else {
                        // a strict subset of parallel branches may carry
                        // any number of tokens; an inclusive join waits
                        // for exactly the ones that can still arrive
                        GatewayKind::Or
                    };
                    let mut chain = chains[g].clone();
                    if closed {
                        chain.retain(|c| c != g);
                    }
                    (members.into_iter().collect::<BTreeSet<_>>(), kind, chain, closed.then(|| g.clone()))
                }
                None => (
                    (0..fwd_units.len()).collect(),
                    GatewayKind::Xor,
                    Vec::new(),
                    None,
                ),
            };
            // Cross-check the dominator-based choice against what the
            // branches can actually deliver; filtering can break the
            // symmetry the closure computation assumes. The inclusive
            // join is the safe merge for every mixed situation.
            if q.len() > 1 {
                let labels: Vec<&str> = q
                    .iter()
                    .filter_map(|&i| b.model.task_name(&fwd_units[i].0))
                    .collect();
                let all_tasks = labels.len() == q.len();
                let all_concurrent = all_tasks
                    && labels.iter().enumerate().all(|(i, a)| {
                        labels[i + 1..].iter().all(|c| relation.contains(a, c))
                    });
                match kind {
                    // several concurrent tokens can hit an exclusive merge
                    GatewayKind::Xor if all_concurrent => kind = GatewayKind::Or,
                    GatewayKind::And => {
                        // a parallel join deadlocks when an input is only
                        // conditionally supplied: non-concurrent end
                        // tasks, or a choice split feeding it directly
                        let conditional_input = q.iter().any(|&i| {
                            matches!(
                                b.model.nodes.get(&fwd_units[i].0),
                                Some(Node::Gateway {
                                    kind: GatewayKind::Xor | GatewayKind::Or,
                                    direction: GatewayDirection::Split,
                                })
                            )
                        });
                        if (all_tasks && !all_concurrent) || conditional_input {
                            kind = GatewayKind::Or;
                        }
                    }
                    _ => {}
                }
            }
            let j = b.gateway(kind, GatewayDirection::Join);
            let mut rest = Vec::new();
            for (i, unit) in fwd_units.into_iter().enumerate() {
                if q.contains(&i) {
                    b.model.add_flow(unit.0, j.clone());
                } else {
                    rest.push(unit);
                }
            }
            if let Some(g) = closed_split {
                b.model.gateway_pairs.insert(g, j.clone());
            }
            rest.push((j, next_chain));
            fwd_units = rest;
        }

        let fwd_entry = fwd_units.pop().map(|(id, _)| id);
        if back_srcs.is_empty() {
            b.model.add_flow(fwd_entry.unwrap(), n);
        } else {
            let lj = b.gateway(GatewayKind::Xor, GatewayDirection::Join);
            if let Some(f) = fwd_entry {
                b.model.add_flow(f, lj.clone());
            }
            for s in back_srcs {
                b.model.flows.remove(&(s.clone(), n.clone()));
                b.back_flows.remove(&(s.clone(), n.clone()));
                b.model.add_flow(s.clone(), lj.clone());
                b.back_flows.insert((s, lj.clone()));
            }
            b.model.add_flow(lj, n);
        }
    }
    Ok(())
}

/// Back flows of a finished model, recomputed structurally.
pub fn model_back_flows(model: &BpmnModel) -> BTreeSet<(NodeId, NodeId)> {
    let ids: Vec<&NodeId> = model.nodes.keys().collect();
    let idx: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let edges: BTreeSet<(usize, usize)> = model
        .flows
        .iter()
        .map(|(a, b)| (idx[a], idx[b]))
        .collect();
    let start = match model.start_id() {
        Some(s) => idx[s],
        None => return BTreeSet::new(),
    };
    dfs_back_edges(ids.len(), &edges, start)
        .into_iter()
        .map(|(a, b)| (ids[a].clone(), ids[b].clone()))
        .collect()
}

/// Moves any back flow leaving a parallel split onto a fresh XOR gateway
/// placed just before it, so that loop repetition never re-triggers only
/// one parallel branch. Returns the splits that were repaired.
pub fn repair_improper_completion(model: &mut BpmnModel) -> Vec<NodeId> {
    let back = model_back_flows(model);
    let offenders: Vec<NodeId> = model
        .nodes
        .iter()
        .filter(|(id, n)| {
            matches!(
                n,
                Node::Gateway {
                    kind: GatewayKind::And | GatewayKind::Or,
                    direction: GatewayDirection::Split
                }
            ) && back.iter().any(|(a, _)| a == *id)
        })
        .map(|(id, _)| id.clone())
        .collect();
    let mut counter = model
        .nodes
        .keys()
        .filter(|id| id.starts_with("xor_") || id.starts_with("and_") || id.starts_with("or_"))
        .count();
    for g in &offenders {
        counter += 1;
        let x = format!("xor_split_r{counter}");
        model.add_node(
            x.clone(),
            Node::Gateway { kind: GatewayKind::Xor, direction: GatewayDirection::Split },
        );
        let pred = model.predecessors(g)[0].clone();
        model.flows.remove(&(pred.clone(), g.clone()));
        model.add_flow(pred, x.clone());
        model.add_flow(x.clone(), g.clone());
        let moved: Vec<(NodeId, NodeId)> = back
            .iter()
            .filter(|(a, _)| a == g)
            .cloned()
            .collect();
        for (a, t) in moved {
            model.flows.remove(&(a, t.clone()));
            model.add_flow(x.clone(), t);
        }
    }
    collapse_trivial_gateways(model);
    offenders
}

/// Removes gateways left with a single input and output.
pub fn collapse_trivial_gateways(model: &mut BpmnModel) {
    loop {
        let victim = model.nodes.iter().find_map(|(id, n)| {
            if n.is_gateway()
                && model.predecessors(id).len() == 1
                && model.successors(id).len() == 1
            {
                Some(id.clone())
            } else {
                None
            }
        });
        match victim {
            Some(id) => {
                let p = model.predecessors(&id)[0].clone();
                let s = model.successors(&id)[0].clone();
                model.flows.remove(&(p.clone(), id.clone()));
                model.flows.remove(&(id.clone(), s.clone()));
                model.add_flow(p, s);
                model.nodes.remove(&id);
                model.gateway_pairs.retain(|k, v| k != &id && v != &id);
                model.unpaired_splits.remove(&id);
            }
            None => break,
        }
    }
}

/// First task reached on each outgoing branch of a gateway, walking
/// through nested gateways.
fn branch_first_tasks(model: &BpmnModel, from: &NodeId) -> Vec<BTreeSet<String>> {
    let mut out = Vec::new();
    for head in model.successors(from) {
        let mut tasks = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut queue = vec![head.clone()];
        while let Some(id) = queue.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            match model.nodes.get(&id) {
                Some(Node::Task { name }) => {
                    tasks.insert(name.clone());
                }
                Some(Node::Gateway { .. }) => {
                    queue.extend(model.successors(&id).into_iter().cloned());
                }
                _ => {}
            }
        }
        out.push(tasks);
    }
    out
}

/// Relaxes parallel splits into inclusive ones when the log shows their
/// branches to be optional: a branch pair votes for OR when it appears
/// both together and apart across traces, in comparable numbers. A split
/// converts when more than half of its branch pairs vote for it; its
/// paired join converts with it. Splits lacking a paired join are left
/// alone and reported.
pub fn detect_or_splits(
    model: &mut BpmnModel,
    stats: &ConcurrencyStats,
) -> (Vec<NodeId>, Vec<NodeId>) {
    let and_splits: Vec<NodeId> = model
        .nodes
        .iter()
        .filter(|(_, n)| {
            matches!(
                n,
                Node::Gateway { kind: GatewayKind::And, direction: GatewayDirection::Split }
            )
        })
        .map(|(id, _)| id.clone())
        .collect();
    let mut converted = Vec::new();
    let mut skipped = Vec::new();
    for g in and_splits {
        let branches = branch_first_tasks(model, &g);
        let mut eligible = 0usize;
        let mut total = 0usize;
        for i in 0..branches.len() {
            for j in i + 1..branches.len() {
                total += 1;
                let ok = !branches[i].is_empty()
                    && !branches[j].is_empty()
                    && branches[i].iter().all(|a| {
                        branches[j].iter().all(|b| {
                            let conc = stats.concurrent_traces(a, b);
                            let excl = stats.exclusive(a, b);
                            conc >= 1 && excl >= 1 && 2 * conc.min(excl) >= conc.max(excl)
                        })
                    });
                if ok {
                    eligible += 1;
                }
            }
        }
        if 2 * eligible > total {
            match model.gateway_pairs.get(&g).cloned() {
                Some(join) => {
                    for id in [&g, &join] {
                        if let Some(Node::Gateway { kind, .. }) = model.nodes.get_mut(id) {
                            *kind = GatewayKind::Or;
                        }
                    }
                    converted.push(g);
                }
                None => skipped.push(g),
            }
        }
    }
    (converted, skipped)
}

/// Full synthesis: gateway discovery, loop-repetition repair, and
/// inclusive-choice detection.
pub fn discover_model(
    dfg: &Dfg,
    relation: &ConcurrencyRelation,
    stats: &ConcurrencyStats,
) -> Result<BpmnModel> {
    let mut model = synthesize(dfg, relation)?;
    repair_improper_completion(&mut model);
    detect_or_splits(&mut model, stats);
    model.validate()?;
    Ok(model)
}
