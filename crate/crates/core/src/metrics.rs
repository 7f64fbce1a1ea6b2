//! Simplicity metrics over a BPMN model.

use crate::bpmn::{BpmnModel, GatewayDirection, GatewayKind, Node};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics {
    /// Total node count: events, tasks, and gateways.
    pub size: usize,
    /// Control-flow complexity: summed over split gateways, an XOR adds
    /// one choice per branch, an AND adds one, an OR adds 2^n - 1.
    pub cfc: u64,
    pub tasks: usize,
    pub gateways: usize,
    pub flows: usize,
}

pub fn compute_size(model: &BpmnModel) -> usize {
    model.nodes.len()
}

pub fn compute_cfc(model: &BpmnModel) -> u64 {
    let mut cfc = 0u64;
    for (id, node) in &model.nodes {
        if let Node::Gateway { kind, direction: GatewayDirection::Split } = node {
            let n = model.successors(id).len() as u32;
            cfc += match kind {
                GatewayKind::Xor => n as u64,
                GatewayKind::And => 1,
                GatewayKind::Or => 2u64.saturating_pow(n) - 1,
            };
        }
    }
    cfc
}

pub fn compute_metrics(model: &BpmnModel) -> Metrics {
    Metrics {
        size: compute_size(model),
        cfc: compute_cfc(model),
        tasks: model.task_ids().len(),
        gateways: model.nodes.values().filter(|n| n.is_gateway()).count(),
        flows: model.flows.len(),
    }
}

impl Metrics {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "size": self.size,
            "cfc": self.cfc,
            "tasks": self.tasks,
            "gateways": self.gateways,
            "flows": self.flows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpmn::Node;

    fn model_with_splits(splits: &[(GatewayKind, usize)]) -> BpmnModel {
        // start -> g1 -> ... tasks ... joined stepwise; only degrees and
        // kinds matter for cfc, so build a star per split
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        let mut prev = "start".to_string();
        for (i, (kind, branches)) in splits.iter().enumerate() {
            let g = format!("g_split_{i}");
            let j = format!("g_join_{i}");
            m.add_node(g.clone(), Node::Gateway { kind: *kind, direction: GatewayDirection::Split });
            m.add_node(j.clone(), Node::Gateway { kind: *kind, direction: GatewayDirection::Join });
            m.add_flow(prev, g.clone());
            for k in 0..*branches {
                let t = format!("task_{i}_{k}");
                m.add_node(t.clone(), Node::Task { name: t.clone() });
                m.add_flow(g.clone(), t.clone());
                m.add_flow(t, j.clone());
            }
            prev = j;
        }
        m.add_flow(prev, "end");
        m
    }

    #[test]
    fn cfc_of_xor_counts_branches() {
        let m = model_with_splits(&[(GatewayKind::Xor, 3)]);
        assert_eq!(compute_cfc(&m), 3);
    }

    #[test]
    fn cfc_of_and_is_one() {
        let m = model_with_splits(&[(GatewayKind::And, 4)]);
        assert_eq!(compute_cfc(&m), 1);
    }

    #[test]
    fn cfc_of_or_counts_nonempty_subsets() {
        let m = model_with_splits(&[(GatewayKind::Or, 3)]);
        assert_eq!(compute_cfc(&m), 7);
    }

    #[test]
    fn cfc_sums_over_splits() {
        let m = model_with_splits(&[(GatewayKind::Xor, 2), (GatewayKind::Or, 2), (GatewayKind::And, 2)]);
        assert_eq!(compute_cfc(&m), 2 + 3 + 1);
    }

    #[test]
    fn size_counts_every_node() {
        let m = model_with_splits(&[(GatewayKind::Xor, 2)]);
        // start, end, 2 gateways, 2 tasks
        assert_eq!(compute_size(&m), 6);
        let metrics = compute_metrics(&m);
        assert_eq!(metrics.tasks, 2);
        assert_eq!(metrics.gateways, 2);
        assert_eq!(metrics.flows, m.flows.len());
    }
}
