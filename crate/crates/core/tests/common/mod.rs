//! Shared fixtures and generators for the integration and acceptance
//! suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use procmine::bpmn::{BpmnModel, GatewayDirection, GatewayKind, Node};
use procmine::concurrency::intervals_overlap;
use procmine::dfg::Pair;
use procmine::event_log::{
    pair_lifecycles, Event, PairingMode, Phase, RefinedLog, Trace,
};

pub fn mk_trace(case: &str, steps: &[(&str, Phase)]) -> Trace {
    Trace {
        case_id: case.into(),
        events: steps
            .iter()
            .enumerate()
            .map(|(i, (label, phase))| Event {
                label: (*label).into(),
                phase: *phase,
                timestamp: Utc.timestamp_opt(60 * (i as i64 + 1), 0).unwrap(),
            })
            .collect(),
    }
}

use Phase::{End as E, Start as S};

/// Four traces over A..F with two truly concurrent pairs (B,C) and (D,E).
pub fn parallel_pairs_log() -> RefinedLog {
    let t1 = mk_trace(
        "1",
        &[
            ("A", S), ("A", E), ("B", S), ("C", S), ("C", E), ("B", E),
            ("E", S), ("D", S), ("D", E), ("E", E), ("F", S), ("F", E),
        ],
    );
    let t2 = mk_trace(
        "2",
        &[
            ("A", S), ("A", E), ("B", S), ("C", S), ("B", E), ("C", E),
            ("E", S), ("D", S), ("E", E), ("D", E), ("F", S), ("F", E),
        ],
    );
    let t3 = mk_trace(
        "3",
        &[
            ("A", S), ("A", E), ("C", S), ("B", S), ("B", E), ("C", E),
            ("D", S), ("E", S), ("D", E), ("E", E), ("F", S), ("F", E),
        ],
    );
    let t4 = mk_trace(
        "4",
        &[
            ("A", S), ("A", E), ("C", S), ("B", S), ("C", E), ("B", E),
            ("D", S), ("E", S), ("E", E), ("D", E), ("F", S), ("F", E),
        ],
    );
    RefinedLog::new(vec![t1, t2, t3, t4]).unwrap()
}

/// Six traces where B, C, D run in balanced optional combinations
/// between A and E.
pub fn inclusive_choice_log() -> RefinedLog {
    let mut traces = Vec::new();
    for i in 0..3 {
        traces.push(mk_trace(
            &format!("t1-{i}"),
            &[
                ("A", S), ("A", E), ("B", S), ("C", S), ("D", S),
                ("B", E), ("D", E), ("C", E), ("E", S), ("E", E),
            ],
        ));
    }
    for i in 0..2 {
        traces.push(mk_trace(
            &format!("t2-{i}"),
            &[
                ("A", S), ("A", E), ("C", S), ("D", S), ("C", E),
                ("D", E), ("E", S), ("E", E),
            ],
        ));
    }
    traces.push(mk_trace(
        "t3",
        &[
            ("A", S), ("A", E), ("B", S), ("D", S), ("D", E),
            ("B", E), ("E", S), ("E", E),
        ],
    ));
    RefinedLog::new(traces).unwrap()
}

/// Independent overlap oracle: pairs every instance against every other
/// within each trace, quadratically.
pub fn brute_force_overlaps(log: &RefinedLog) -> BTreeMap<Pair, u64> {
    let mut counts: BTreeMap<Pair, u64> = BTreeMap::new();
    for trace in &log.traces {
        let instances = pair_lifecycles(trace, PairingMode::Strict).unwrap();
        for i in 0..instances.len() {
            for j in i + 1..instances.len() {
                let (a, b) = (&instances[i], &instances[j]);
                if a.label != b.label && intervals_overlap(a, b) {
                    *counts.entry(Pair::new(&a.label, &b.label)).or_default() += 1;
                }
            }
        }
    }
    counts
}

/// Random lifecycle log: each trace interleaves a few activity intervals
/// over a small alphabet, with arbitrary overlap structure.
pub fn random_log(seed: u64, traces: usize, alphabet: usize, max_len: usize) -> RefinedLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..alphabet).map(|i| format!("act{i}")).collect();
    let mut out = Vec::new();
    for case in 0..traces {
        let n = rng.gen_range(1..=max_len);
        // draw intervals, then serialize to events
        let mut intervals: Vec<(String, i64, i64)> = Vec::new();
        let mut clock = 0i64;
        for _ in 0..n {
            let label = labels[rng.gen_range(0..labels.len())].clone();
            let start = clock + rng.gen_range(0..5);
            let dur = rng.gen_range(1..10);
            intervals.push((label, start, start + dur));
            clock = start + rng.gen_range(1..8);
        }
        let mut events: Vec<Event> = Vec::new();
        for (label, s, e) in &intervals {
            events.push(Event {
                label: label.clone(),
                phase: Phase::Start,
                timestamp: Utc.timestamp_opt(*s, 0).unwrap(),
            });
            events.push(Event {
                label: label.clone(),
                phase: Phase::End,
                timestamp: Utc.timestamp_opt(*e, 0).unwrap(),
            });
        }
        events.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| b.phase.cmp(&a.phase))
                .then_with(|| a.label.cmp(&b.label))
        });
        out.push(Trace { case_id: format!("case-{case}"), events });
    }
    RefinedLog::new(out).unwrap()
}

/// Builder for random block-structured models.
pub struct ModelGen {
    rng: ChaCha8Rng,
    next_label: usize,
    pub allow_loops: bool,
    pub allow_or: bool,
}

enum GenBlock {
    Task(String),
    Seq(Vec<GenBlock>),
    Gate(GatewayKind, Vec<GenBlock>),
    Loop(Box<GenBlock>),
}

impl ModelGen {
    pub fn new(seed: u64) -> ModelGen {
        ModelGen { rng: ChaCha8Rng::seed_from_u64(seed), next_label: 0, allow_loops: false, allow_or: false }
    }

    fn task(&mut self) -> GenBlock {
        let l = format!("t{}", self.next_label);
        self.next_label += 1;
        GenBlock::Task(l)
    }

    fn block(&mut self, depth: usize) -> GenBlock {
        if depth == 0 {
            return self.task();
        }
        match self.rng.gen_range(0..10) {
            0..=3 => self.task(),
            4..=6 => {
                let n = self.rng.gen_range(2..=3);
                GenBlock::Seq((0..n).map(|_| self.block(depth - 1)).collect())
            }
            7..=8 => {
                let kind = match self.rng.gen_range(0..3) {
                    0 => GatewayKind::Xor,
                    1 => GatewayKind::And,
                    _ if self.allow_or => GatewayKind::Or,
                    _ => GatewayKind::And,
                };
                let n = self.rng.gen_range(2..=3);
                GenBlock::Gate(kind, (0..n).map(|_| self.block(depth - 1)).collect())
            }
            _ => {
                if self.allow_loops {
                    GenBlock::Loop(Box::new(self.block(depth - 1)))
                } else {
                    self.task()
                }
            }
        }
    }

    /// A fresh random model with 1-2 levels of nesting.
    pub fn model(&mut self) -> BpmnModel {
        self.next_label = 0;
        let depth = self.rng.gen_range(1..=2);
        let root = GenBlock::Seq(vec![self.task(), self.block(depth), self.task()]);
        self.assemble(root)
    }

    /// Like [`model`], but with at least one loop in the middle.
    pub fn cyclic_model(&mut self) -> BpmnModel {
        self.next_label = 0;
        let depth = self.rng.gen_range(1..=2);
        let body = GenBlock::Loop(Box::new(self.block(depth)));
        let root = GenBlock::Seq(vec![self.task(), body, self.task()]);
        self.assemble(root)
    }

    fn assemble(&mut self, root: GenBlock) -> BpmnModel {
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        let mut counter = 0usize;
        let entry = emit(&mut m, &root, "end", &mut counter);
        m.add_flow("start", entry);
        m
    }
}

/// Wires a generated block into the model, returning its entry node; the
/// block's outgoing flow targets `exit`.
fn emit(m: &mut BpmnModel, block: &GenBlock, exit: &str, counter: &mut usize) -> String {
    match block {
        GenBlock::Task(l) => {
            let id = format!("task_{l}");
            m.add_node(id.clone(), Node::Task { name: l.clone() });
            m.add_flow(id.clone(), exit);
            id
        }
        GenBlock::Seq(blocks) => {
            let mut entry = exit.to_string();
            for b in blocks.iter().rev() {
                entry = emit(m, b, &entry, counter);
            }
            entry
        }
        GenBlock::Gate(kind, branches) => {
            *counter += 1;
            let split = format!("gen_split_{counter}");
            let join = format!("gen_join_{counter}");
            m.add_node(split.clone(), Node::Gateway { kind: *kind, direction: GatewayDirection::Split });
            m.add_node(join.clone(), Node::Gateway { kind: *kind, direction: GatewayDirection::Join });
            m.add_flow(join.clone(), exit);
            for b in branches {
                let entry = emit(m, b, &join, counter);
                m.add_flow(split.clone(), entry);
            }
            split
        }
        GenBlock::Loop(body) => {
            *counter += 1;
            let lj = format!("gen_loopjoin_{counter}");
            let ls = format!("gen_loopsplit_{counter}");
            m.add_node(lj.clone(), Node::Gateway { kind: GatewayKind::Xor, direction: GatewayDirection::Join });
            m.add_node(ls.clone(), Node::Gateway { kind: GatewayKind::Xor, direction: GatewayDirection::Split });
            let entry = emit(m, body, &ls, counter);
            m.add_flow(lj.clone(), entry);
            m.add_flow(ls.clone(), lj.clone());
            m.add_flow(ls, exit);
            lj
        }
    }
}
