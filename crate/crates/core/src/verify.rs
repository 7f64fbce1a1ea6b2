//! Soundness checking by explicit token-game exploration.
//!
//! A model is sound when every reachable marking can still finish, the end
//! event is reached with no tokens left behind, and every task can fire in
//! some run. OR-joins use vicinity semantics: the join waits while any
//! token upstream of an unmarked input could still arrive.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::bpmn::{BpmnModel, GatewayDirection, GatewayKind, Node, NodeId};
use crate::error::{Error, Result};

/// Per-flow token cap. A sound workflow graph stays safe, so hitting the
/// cap is itself evidence of trouble; it keeps exploration finite either
/// way.
const TOKEN_CAP: u8 = 8;

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    /// Maximum number of distinct markings to explore.
    pub state_bound: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { state_bound: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub sound: bool,
    pub deadlock_free: bool,
    pub proper_completion: bool,
    pub no_dead_activities: bool,
    pub states_explored: usize,
    pub diagnostics: Vec<String>,
}

impl SoundnessReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sound": self.sound,
            "deadlock_free": self.deadlock_free,
            "proper_completion": self.proper_completion,
            "no_dead_activities": self.no_dead_activities,
            "states_explored": self.states_explored,
            "diagnostics": self.diagnostics,
        })
    }
}

/// Marking: token count per flow plus how often the end event has fired
/// (saturating at 2; one is proper, two is already a fault).
type State = (Vec<u8>, u8);

struct Engine {
    flows: Vec<(NodeId, NodeId)>,
    /// node -> (incoming flow indices, outgoing flow indices)
    io: BTreeMap<NodeId, (Vec<usize>, Vec<usize>)>,
    kinds: BTreeMap<NodeId, Node>,
    /// for each OR-join input flow: other flows that can still feed it
    or_upstream: BTreeMap<usize, BTreeSet<usize>>,
    start_out: usize,
    task_order: Vec<NodeId>,
}

/// What a single transition firing did: the successor marking and the
/// task label it emitted, if any.
struct Firing {
    state: State,
    task: Option<usize>,
    overflow: bool,
}

impl Engine {
    fn new(model: &BpmnModel) -> Result<Engine> {
        model.validate()?;
        let flows: Vec<(NodeId, NodeId)> = model.flows.iter().cloned().collect();
        let mut io: BTreeMap<NodeId, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for id in model.nodes.keys() {
            io.insert(id.clone(), (Vec::new(), Vec::new()));
        }
        for (i, (a, b)) in flows.iter().enumerate() {
            io.get_mut(a).unwrap().1.push(i);
            io.get_mut(b).unwrap().0.push(i);
        }
        let start = model.start_id().unwrap().clone();
        let start_out = io[&start].1[0];

        // vicinity of each OR-join input: flows whose target still reaches
        // the input's source without passing through the join itself
        let mut or_upstream = BTreeMap::new();
        for (id, node) in &model.nodes {
            if !matches!(
                node,
                Node::Gateway { kind: GatewayKind::Or, direction: GatewayDirection::Join }
            ) {
                continue;
            }
            for &fin in &io[id].0 {
                let p = flows[fin].0.clone();
                // reverse reachability from p, never crossing the join
                let mut seen: BTreeSet<NodeId> = [p.clone()].into();
                let mut queue = VecDeque::from([p]);
                while let Some(n) = queue.pop_front() {
                    for pred in model.predecessors(&n) {
                        if pred != id && seen.insert(pred.clone()) {
                            queue.push_back(pred.clone());
                        }
                    }
                }
                let ups: BTreeSet<usize> = flows
                    .iter()
                    .enumerate()
                    .filter(|(i, (_, tgt))| *i != fin && seen.contains(tgt))
                    .map(|(i, _)| i)
                    .collect();
                or_upstream.insert(fin, ups);
            }
        }

        Ok(Engine {
            flows,
            io,
            kinds: model.nodes.clone(),
            or_upstream,
            start_out,
            task_order: model.task_ids().into_iter().cloned().collect(),
        })
    }

    fn initial(&self) -> State {
        let mut tokens = vec![0u8; self.flows.len()];
        tokens[self.start_out] = 1;
        (tokens, 0)
    }

    fn is_final(&self, s: &State) -> bool {
        s.1 == 1 && s.0.iter().all(|&t| t == 0)
    }

    fn add_token(tokens: &mut Vec<u8>, idx: usize) -> bool {
        if tokens[idx] >= TOKEN_CAP {
            true
        } else {
            tokens[idx] += 1;
            false
        }
    }

    fn successors(&self, s: &State) -> Vec<Firing> {
        let mut out = Vec::new();
        for (id, node) in &self.kinds {
            let (ins, outs) = &self.io[id];
            match node {
                Node::StartEvent => {}
                Node::EndEvent => {
                    let fin = ins[0];
                    if s.0[fin] > 0 {
                        let mut next = s.clone();
                        next.0[fin] -= 1;
                        next.1 = (next.1 + 1).min(2);
                        out.push(Firing { state: next, task: None, overflow: false });
                    }
                }
                Node::Task { .. } => {
                    let fin = ins[0];
                    if s.0[fin] > 0 {
                        let mut next = s.clone();
                        next.0[fin] -= 1;
                        let overflow = Self::add_token(&mut next.0, outs[0]);
                        let task = self.task_order.iter().position(|t| t == id);
                        out.push(Firing { state: next, task, overflow });
                    }
                }
                Node::Gateway { kind, direction: GatewayDirection::Split } => {
                    let fin = ins[0];
                    if s.0[fin] == 0 {
                        continue;
                    }
                    match kind {
                        GatewayKind::Xor => {
                            for &fo in outs {
                                let mut next = s.clone();
                                next.0[fin] -= 1;
                                let overflow = Self::add_token(&mut next.0, fo);
                                out.push(Firing { state: next, task: None, overflow });
                            }
                        }
                        GatewayKind::And => {
                            let mut next = s.clone();
                            next.0[fin] -= 1;
                            let mut overflow = false;
                            for &fo in outs {
                                overflow |= Self::add_token(&mut next.0, fo);
                            }
                            out.push(Firing { state: next, task: None, overflow });
                        }
                        GatewayKind::Or => {
                            // every non-empty subset of branches
                            for mask in 1u32..(1 << outs.len()) {
                                let mut next = s.clone();
                                next.0[fin] -= 1;
                                let mut overflow = false;
                                for (k, &fo) in outs.iter().enumerate() {
                                    if mask & (1 << k) != 0 {
                                        overflow |= Self::add_token(&mut next.0, fo);
                                    }
                                }
                                out.push(Firing { state: next, task: None, overflow });
                            }
                        }
                    }
                }
                Node::Gateway { kind, direction: GatewayDirection::Join } => match kind {
                    GatewayKind::Xor => {
                        for &fin in ins {
                            if s.0[fin] > 0 {
                                let mut next = s.clone();
                                next.0[fin] -= 1;
                                let overflow = Self::add_token(&mut next.0, outs[0]);
                                out.push(Firing { state: next, task: None, overflow });
                            }
                        }
                    }
                    GatewayKind::And => {
                        if ins.iter().all(|&fin| s.0[fin] > 0) {
                            let mut next = s.clone();
                            for &fin in ins {
                                next.0[fin] -= 1;
                            }
                            let overflow = Self::add_token(&mut next.0, outs[0]);
                            out.push(Firing { state: next, task: None, overflow });
                        }
                    }
                    GatewayKind::Or => {
                        let marked: Vec<usize> =
                            ins.iter().copied().filter(|&f| s.0[f] > 0).collect();
                        if marked.is_empty() {
                            continue;
                        }
                        let blocked = ins.iter().any(|&fin| {
                            s.0[fin] == 0
                                && self.or_upstream[&fin].iter().any(|&u| s.0[u] > 0)
                        });
                        if !blocked {
                            let mut next = s.clone();
                            for &fin in &marked {
                                next.0[fin] -= 1;
                            }
                            let overflow = Self::add_token(&mut next.0, outs[0]);
                            out.push(Firing { state: next, task: None, overflow });
                        }
                    }
                },
            }
        }
        out
    }
}

/// Explores the full reachable marking graph and classifies the model.
pub fn check_soundness(model: &BpmnModel, config: &VerifyConfig) -> Result<SoundnessReport> {
    let engine = Engine::new(model)?;
    let init = engine.initial();

    let mut index: BTreeMap<State, usize> = BTreeMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut fired = vec![false; engine.task_order.len()];
    let mut diagnostics = Vec::new();
    let mut overflowed = false;

    index.insert(init.clone(), 0);
    states.push(init);
    edges.push(Vec::new());
    let mut head = 0;
    while head < states.len() {
        if states.len() > config.state_bound {
            return Err(Error::BoundExhausted {
                bound: config.state_bound,
                explored: states.len(),
            });
        }
        let current = states[head].clone();
        for firing in engine.successors(&current) {
            if firing.overflow {
                overflowed = true;
                continue;
            }
            if let Some(t) = firing.task {
                fired[t] = true;
            }
            let next_idx = match index.get(&firing.state) {
                Some(&i) => i,
                None => {
                    let i = states.len();
                    index.insert(firing.state.clone(), i);
                    states.push(firing.state);
                    edges.push(Vec::new());
                    i
                }
            };
            edges[head].push(next_idx);
        }
        head += 1;
    }

    // proper completion: reaching the end never leaves tokens behind, and
    // the end fires at most once
    let mut proper = true;
    for s in &states {
        if s.1 >= 2 || (s.1 == 1 && s.0.iter().any(|&t| t > 0)) {
            proper = false;
            diagnostics.push("tokens remain after the end event fires".into());
            break;
        }
    }
    if overflowed {
        proper = false;
        diagnostics.push(format!("token count exceeded {TOKEN_CAP} on a flow"));
    }

    // option to complete: every explored marking co-reaches a final one
    let finals: Vec<usize> = states
        .iter()
        .enumerate()
        .filter(|(_, s)| engine.is_final(s))
        .map(|(i, _)| i)
        .collect();
    let mut co = vec![false; states.len()];
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (from, tos) in edges.iter().enumerate() {
        for &to in tos {
            rev[to].push(from);
        }
    }
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &f in &finals {
        if !co[f] {
            co[f] = true;
            queue.push_back(f);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &p in &rev[i] {
            if !co[p] {
                co[p] = true;
                queue.push_back(p);
            }
        }
    }
    let deadlock_free = !finals.is_empty() && co.iter().all(|&c| c);
    if finals.is_empty() {
        diagnostics.push("no run reaches the end event cleanly".into());
    } else if !co.iter().all(|&c| c) {
        diagnostics.push("some reachable marking can no longer complete".into());
    }

    let no_dead = fired.iter().all(|&f| f);
    if !no_dead {
        for (i, f) in fired.iter().enumerate() {
            if !f {
                diagnostics.push(format!(
                    "task '{}' can never fire",
                    engine.task_order[i]
                ));
            }
        }
    }

    Ok(SoundnessReport {
        sound: proper && deadlock_free && no_dead,
        deadlock_free,
        proper_completion: proper,
        no_dead_activities: no_dead,
        states_explored: states.len(),
        diagnostics,
    })
}

/// All task-label sequences of completed runs with at most `k` tasks.
/// Loops are cut off once they stop contributing new labels within the
/// budget.
pub fn language_upto_k(model: &BpmnModel, k: usize) -> Result<BTreeSet<Vec<String>>> {
    let engine = Engine::new(model)?;
    let mut out = BTreeSet::new();
    let mut stack: Vec<(State, Vec<String>, BTreeSet<State>)> =
        vec![(engine.initial(), Vec::new(), BTreeSet::new())];
    while let Some((state, trace, silent_seen)) = stack.pop() {
        if engine.is_final(&state) {
            out.insert(trace.clone());
        }
        for firing in engine.successors(&state) {
            if firing.overflow {
                continue;
            }
            match firing.task {
                Some(t) => {
                    if trace.len() < k {
                        let mut trace = trace.clone();
                        trace.push(engine.task_order[t].clone());
                        stack.push((firing.state, trace, BTreeSet::new()));
                    }
                }
                None => {
                    // avoid silent cycles: prune if this marking was seen
                    // since the last task emission
                    if !silent_seen.contains(&firing.state) {
                        let mut seen = silent_seen.clone();
                        seen.insert(firing.state.clone());
                        stack.push((firing.state, trace.clone(), seen));
                    }
                }
            }
        }
    }
    // report task names, not internal ids
    let rename: BTreeMap<&NodeId, &str> = engine
        .task_order
        .iter()
        .map(|id| (id, model.task_name(id).unwrap_or(id.as_str())))
        .collect();
    Ok(out
        .into_iter()
        .map(|tr| tr.iter().map(|id| rename[id].to_string()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpmn::Node;

    fn seq(names: &[&str]) -> BpmnModel {
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        let mut prev = "start".to_string();
        for n in names {
            let id = format!("task_{n}");
            m.add_node(id.clone(), Node::Task { name: n.to_string() });
            m.add_flow(prev, id.clone());
            prev = id;
        }
        m.add_flow(prev, "end");
        m
    }

    fn gateway(m: &mut BpmnModel, id: &str, kind: GatewayKind, dir: GatewayDirection) {
        m.add_node(id, Node::Gateway { kind, direction: dir });
    }

    fn diamond(kind: GatewayKind) -> BpmnModel {
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        for t in ["b", "c"] {
            m.add_node(format!("task_{t}"), Node::Task { name: t.into() });
        }
        gateway(&mut m, "g_split", kind, GatewayDirection::Split);
        gateway(&mut m, "g_join", kind, GatewayDirection::Join);
        m.add_flow("start", "g_split");
        m.add_flow("g_split", "task_b");
        m.add_flow("g_split", "task_c");
        m.add_flow("task_b", "g_join");
        m.add_flow("task_c", "g_join");
        m.add_flow("g_join", "end");
        m
    }

    #[test]
    fn sequence_is_sound() {
        let r = check_soundness(&seq(&["a", "b"]), &VerifyConfig::default()).unwrap();
        assert!(r.sound && r.deadlock_free && r.proper_completion && r.no_dead_activities);
    }

    #[test]
    fn and_xor_or_diamonds_are_sound() {
        for kind in [GatewayKind::And, GatewayKind::Xor, GatewayKind::Or] {
            let r = check_soundness(&diamond(kind), &VerifyConfig::default()).unwrap();
            assert!(r.sound, "{kind:?} diamond should be sound: {:?}", r.diagnostics);
        }
    }

    #[test]
    fn and_split_into_xor_join_completes_improperly() {
        let mut m = diamond(GatewayKind::And);
        if let Some(Node::Gateway { kind, .. }) = m.nodes.get_mut("g_join") {
            *kind = GatewayKind::Xor;
        }
        let r = check_soundness(&m, &VerifyConfig::default()).unwrap();
        assert!(!r.sound);
        assert!(!r.proper_completion);
    }

    #[test]
    fn xor_split_into_and_join_deadlocks() {
        let mut m = diamond(GatewayKind::Xor);
        if let Some(Node::Gateway { kind, .. }) = m.nodes.get_mut("g_join") {
            *kind = GatewayKind::And;
        }
        let r = check_soundness(&m, &VerifyConfig::default()).unwrap();
        assert!(!r.sound);
        assert!(!r.deadlock_free);
    }

    #[test]
    fn or_join_waits_for_slow_branch() {
        // OR split takes both branches; one branch has two tasks. The
        // join must not fire after only the short branch arrives.
        let mut m = diamond(GatewayKind::Or);
        m.add_node("task_c2", Node::Task { name: "c2".into() });
        m.flows.remove(&("task_c".into(), "g_join".into()));
        m.add_flow("task_c", "task_c2");
        m.add_flow("task_c2", "g_join");
        let r = check_soundness(&m, &VerifyConfig::default()).unwrap();
        assert!(r.sound, "{:?}", r.diagnostics);
        // language: both-branch runs always contain b, c, and c2
        let lang = language_upto_k(&m, 5).unwrap();
        for tr in &lang {
            let has_c = tr.contains(&"c".to_string());
            let has_c2 = tr.contains(&"c2".to_string());
            assert_eq!(has_c, has_c2, "partial branch completion in {tr:?}");
        }
    }

    #[test]
    fn loop_model_is_sound_and_language_repeats() {
        // start -> a -> (xor join) -> b -> (xor split) -> end or back
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        for t in ["a", "b"] {
            m.add_node(format!("task_{t}"), Node::Task { name: t.into() });
        }
        gateway(&mut m, "xj", GatewayKind::Xor, GatewayDirection::Join);
        gateway(&mut m, "xs", GatewayKind::Xor, GatewayDirection::Split);
        m.add_flow("start", "task_a");
        m.add_flow("task_a", "xj");
        m.add_flow("xj", "task_b");
        m.add_flow("task_b", "xs");
        m.add_flow("xs", "end");
        m.add_flow("xs", "xj");
        let r = check_soundness(&m, &VerifyConfig::default()).unwrap();
        assert!(r.sound, "{:?}", r.diagnostics);
        let lang = language_upto_k(&m, 4).unwrap();
        let expected: BTreeSet<Vec<String>> = [
            vec!["a".to_string(), "b".to_string()],
            vec!["a".to_string(), "b".to_string(), "b".to_string()],
            vec!["a".to_string(), "b".to_string(), "b".to_string(), "b".to_string()],
        ]
        .into();
        assert_eq!(lang, expected);
    }

    #[test]
    fn task_behind_starved_and_join_is_dead() {
        // XOR split feeds an AND join: the join never collects both
        // tokens, so the task behind it never fires.
        let mut m = diamond(GatewayKind::Xor);
        if let Some(Node::Gateway { kind, .. }) = m.nodes.get_mut("g_join") {
            *kind = GatewayKind::And;
        }
        m.add_node("task_d", Node::Task { name: "d".into() });
        m.flows.remove(&("g_join".into(), "end".into()));
        m.add_flow("g_join", "task_d");
        m.add_flow("task_d", "end");
        let r = check_soundness(&m, &VerifyConfig::default()).unwrap();
        assert!(!r.sound);
        assert!(!r.no_dead_activities);
        assert!(r.diagnostics.iter().any(|d| d.contains("task_d")));
    }

    #[test]
    fn bound_exhaustion_is_reported() {
        let m = diamond(GatewayKind::And);
        let err = check_soundness(&m, &VerifyConfig { state_bound: 2 }).unwrap_err();
        assert!(matches!(err, Error::BoundExhausted { bound: 2, .. }));
    }

    #[test]
    fn language_of_and_diamond_has_both_orders() {
        let lang = language_upto_k(&diamond(GatewayKind::And), 4).unwrap();
        let expected: BTreeSet<Vec<String>> = [
            vec!["b".to_string(), "c".to_string()],
            vec!["c".to_string(), "b".to_string()],
        ]
        .into();
        assert_eq!(lang, expected);
    }

    #[test]
    fn language_of_or_diamond_includes_single_branches() {
        let lang = language_upto_k(&diamond(GatewayKind::Or), 4).unwrap();
        let expected: BTreeSet<Vec<String>> = [
            vec!["b".to_string()],
            vec!["c".to_string()],
            vec!["b".to_string(), "c".to_string()],
            vec!["c".to_string(), "b".to_string()],
        ]
        .into();
        assert_eq!(lang, expected);
    }
}
