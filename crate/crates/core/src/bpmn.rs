//! BPMN process models: tasks, start/end events, and XOR/AND/OR gateways,
//! plus deterministic XML and DOT serialization.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use quick_xml::events::Event as XmlEvent;
use quick_xml::Reader;

use crate::error::{Error, Result};

pub type NodeId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GatewayKind {
    Xor,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GatewayDirection {
    Split,
    Join,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    StartEvent,
    EndEvent,
    Task { name: String },
    Gateway { kind: GatewayKind, direction: GatewayDirection },
}

impl Node {
    pub fn is_gateway(&self) -> bool {
        matches!(self, Node::Gateway { .. })
    }
}

/// A workflow graph. Node and flow collections are ordered so that
/// serialization is reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BpmnModel {
    pub nodes: BTreeMap<NodeId, Node>,
    pub flows: BTreeSet<(NodeId, NodeId)>,
    /// Split gateway -> matching join gateway, where one was identified.
    pub gateway_pairs: BTreeMap<NodeId, NodeId>,
    /// Split gateways for which no matching join could be identified.
    pub unpaired_splits: BTreeSet<NodeId>,
}

/// Replaces anything outside [A-Za-z0-9_] so a label can serve inside an
/// XML id.
pub fn sanitize_id(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else {
            out.push('_');
        }
    }
    if out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl BpmnModel {
    pub fn add_node(&mut self, id: impl Into<NodeId>, node: Node) -> NodeId {
        let id = id.into();
        self.nodes.insert(id.clone(), node);
        id
    }

    pub fn add_flow(&mut self, from: impl Into<NodeId>, to: impl Into<NodeId>) {
        self.flows.insert((from.into(), to.into()));
    }

    pub fn successors(&self, id: &str) -> Vec<&NodeId> {
        self.flows
            .iter()
            .filter(|(a, _)| a == id)
            .map(|(_, b)| b)
            .collect()
    }

    pub fn predecessors(&self, id: &str) -> Vec<&NodeId> {
        self.flows
            .iter()
            .filter(|(_, b)| b == id)
            .map(|(a, _)| a)
            .collect()
    }

    pub fn start_id(&self) -> Option<&NodeId> {
        self.nodes
            .iter()
            .find(|(_, n)| matches!(n, Node::StartEvent))
            .map(|(id, _)| id)
    }

    pub fn end_id(&self) -> Option<&NodeId> {
        self.nodes
            .iter()
            .find(|(_, n)| matches!(n, Node::EndEvent))
            .map(|(id, _)| id)
    }

    pub fn task_ids(&self) -> Vec<&NodeId> {
        self.nodes
            .iter()
            .filter(|(_, n)| matches!(n, Node::Task { .. }))
            .map(|(id, _)| id)
            .collect()
    }

    pub fn task_name(&self, id: &str) -> Option<&str> {
        match self.nodes.get(id) {
            Some(Node::Task { name }) => Some(name),
            _ => None,
        }
    }

    /// Structural well-formedness: exactly one start and end event with
    /// the right degrees, tasks with one input and output, gateways with
    /// matching fan-in/fan-out, no dangling flow endpoints, and every
    /// node on some start-to-end path.
    pub fn validate(&self) -> Result<()> {
        for (a, b) in &self.flows {
            for id in [a, b] {
                if !self.nodes.contains_key(id) {
                    return Err(Error::InvalidModel(format!(
                        "flow references unknown node '{id}'"
                    )));
                }
            }
        }
        let starts: Vec<_> = self
            .nodes
            .iter()
            .filter(|(_, n)| matches!(n, Node::StartEvent))
            .collect();
        let ends: Vec<_> = self
            .nodes
            .iter()
            .filter(|(_, n)| matches!(n, Node::EndEvent))
            .collect();
        if starts.len() != 1 || ends.len() != 1 {
            return Err(Error::InvalidModel(format!(
                "expected one start and one end event, found {} and {}",
                starts.len(),
                ends.len()
            )));
        }
        for (id, node) in &self.nodes {
            let indeg = self.predecessors(id).len();
            let outdeg = self.successors(id).len();
            let ok = match node {
                Node::StartEvent => indeg == 0 && outdeg == 1,
                Node::EndEvent => indeg == 1 && outdeg == 0,
                Node::Task { .. } => indeg == 1 && outdeg == 1,
                Node::Gateway { direction: GatewayDirection::Split, .. } => {
                    indeg == 1 && outdeg >= 2
                }
                Node::Gateway { direction: GatewayDirection::Join, .. } => {
                    indeg >= 2 && outdeg == 1
                }
            };
            if !ok {
                return Err(Error::InvalidModel(format!(
                    "node '{id}' has in-degree {indeg} and out-degree {outdeg}"
                )));
            }
        }
        let start = starts[0].0.clone();
        let end = ends[0].0.clone();
        let fwd = self.reach_from(&start, true);
        let bwd = self.reach_from(&end, false);
        for id in self.nodes.keys() {
            if !fwd.contains(id) || !bwd.contains(id) {
                return Err(Error::InvalidModel(format!(
                    "node '{id}' is not on a path from start to end"
                )));
            }
        }
        Ok(())
    }

    pub fn reach_from(&self, from: &str, forward: bool) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(from.to_string());
        queue.push_back(from.to_string());
        while let Some(node) = queue.pop_front() {
            let next = if forward {
                self.successors(&node)
            } else {
                self.predecessors(&node)
            };
            for n in next {
                if seen.insert(n.clone()) {
                    queue.push_back(n.clone());
                }
            }
        }
        seen
    }

    /// BPMN 2.0 XML. Output is fully determined by model content: nodes
    /// in id order, then flows in pair order.
    pub fn to_xml(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str(
            "<bpmn:definitions xmlns:bpmn=\"http://www.omg.org/spec/BPMN/20100524/MODEL\" \
             targetNamespace=\"http://example.org/bpmn\" id=\"definitions_1\">\n",
        );
        s.push_str("  <bpmn:process id=\"process_1\" isExecutable=\"false\">\n");
        for (id, node) in &self.nodes {
            let incoming = self.predecessors(id);
            let outgoing = self.successors(id);
            let (tag, name_attr) = match node {
                Node::StartEvent => ("bpmn:startEvent", None),
                Node::EndEvent => ("bpmn:endEvent", None),
                Node::Task { name } => ("bpmn:task", Some(name.as_str())),
                Node::Gateway { kind, .. } => (
                    match kind {
                        GatewayKind::Xor => "bpmn:exclusiveGateway",
                        GatewayKind::And => "bpmn:parallelGateway",
                        GatewayKind::Or => "bpmn:inclusiveGateway",
                    },
                    None,
                ),
            };
            let _ = write!(s, "    <{tag} id=\"{}\"", xml_escape(id));
            if let Some(name) = name_attr {
                let _ = write!(s, " name=\"{}\"", xml_escape(name));
            }
            if let Node::Gateway { direction, .. } = node {
                let dir = match direction {
                    GatewayDirection::Split => "Diverging",
                    GatewayDirection::Join => "Converging",
                };
                let _ = write!(s, " gatewayDirection=\"{dir}\"");
            }
            s.push_str(">\n");
            for p in incoming {
                let _ = writeln!(
                    s,
                    "      <bpmn:incoming>{}</bpmn:incoming>",
                    flow_id(p, id)
                );
            }
            for q in outgoing {
                let _ = writeln!(
                    s,
                    "      <bpmn:outgoing>{}</bpmn:outgoing>",
                    flow_id(id, q)
                );
            }
            let _ = writeln!(s, "    </{tag}>");
        }
        for (a, b) in &self.flows {
            let _ = writeln!(
                s,
                "    <bpmn:sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"/>",
                flow_id(a, b),
                xml_escape(a),
                xml_escape(b)
            );
        }
        s.push_str("  </bpmn:process>\n");
        s.push_str("</bpmn:definitions>\n");
        s
    }

    /// Parses a model back out of the XML produced by [`to_xml`]. Gateway
    /// direction is recovered from flow degrees when the attribute is
    /// absent.
    pub fn from_xml(xml: &str) -> Result<BpmnModel> {
        let mut reader = Reader::from_str(xml);
        reader.config_mut().trim_text(true);
        let mut model = BpmnModel::default();
        let mut pending: Vec<(NodeId, &'static str, Option<String>, Option<String>)> =
            Vec::new();
        let mut buf = Vec::new();
        loop {
            match reader.read_event_into(&mut buf) {
                Ok(XmlEvent::Start(e)) | Ok(XmlEvent::Empty(e)) => {
                    let raw = e.name();
                    let local = std::str::from_utf8(raw.local_name().as_ref())
                        .unwrap_or("")
                        .to_string();
                    let mut id = None;
                    let mut name = None;
                    let mut source = None;
                    let mut target = None;
                    let mut direction = None;
                    for attr in e.attributes().flatten() {
                        let key = std::str::from_utf8(attr.key.local_name().as_ref())
                            .unwrap_or("")
                            .to_string();
                        let value = attr
                            .unescape_value()
                            .map_err(|err| Error::Malformed {
                                location: "xml attribute".into(),
                                message: err.to_string(),
                            })?
                            .into_owned();
                        match key.as_str() {
                            "id" => id = Some(value),
                            "name" => name = Some(value),
                            "sourceRef" => source = Some(value),
                            "targetRef" => target = Some(value),
                            "gatewayDirection" => direction = Some(value),
                            _ => {}
                        }
                    }
                    let kind = match local.as_str() {
                        "startEvent" => Some("start"),
                        "endEvent" => Some("end"),
                        "task" => Some("task"),
                        "exclusiveGateway" => Some("xor"),
                        "parallelGateway" => Some("and"),
                        "inclusiveGateway" => Some("or"),
                        "sequenceFlow" => {
                            match (source, target) {
                                (Some(a), Some(b)) => {
                                    model.flows.insert((a, b));
                                }
                                _ => {
                                    return Err(Error::Malformed {
                                        location: "sequenceFlow".into(),
                                        message: "missing sourceRef or targetRef".into(),
                                    })
                                }
                            }
                            None
                        }
                        _ => None,
                    };
                    if let Some(kind) = kind {
                        let id = id.ok_or_else(|| Error::Malformed {
                            location: local.clone(),
                            message: "missing id attribute".into(),
                        })?;
                        pending.push((id, kind, name, direction));
                    }
                }
                Ok(XmlEvent::Eof) => break,
                Err(err) => {
                    return Err(Error::Malformed {
                        location: format!("xml offset {}", reader.buffer_position()),
                        message: err.to_string(),
                    })
                }
                _ => {}
            }
            buf.clear();
        }
        for (id, kind, name, direction) in pending {
            let node = match kind {
                "start" => Node::StartEvent,
                "end" => Node::EndEvent,
                "task" => Node::Task {
                    name: name.unwrap_or_else(|| id.clone()),
                },
                gw => {
                    let dir = match direction.as_deref() {
                        Some("Diverging") => GatewayDirection::Split,
                        Some("Converging") => GatewayDirection::Join,
                        _ => {
                            let outdeg =
                                model.flows.iter().filter(|(a, _)| a == &id).count();
                            if outdeg > 1 {
                                GatewayDirection::Split
                            } else {
                                GatewayDirection::Join
                            }
                        }
                    };
                    let kind = match gw {
                        "xor" => GatewayKind::Xor,
                        "and" => GatewayKind::And,
                        _ => GatewayKind::Or,
                    };
                    Node::Gateway { kind, direction: dir }
                }
            };
            model.nodes.insert(id, node);
        }
        if model.nodes.is_empty() {
            return Err(Error::Malformed {
                location: "xml document".into(),
                message: "no BPMN nodes found".into(),
            });
        }
        Ok(model)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph bpmn {\n  rankdir=LR;\n");
        for (id, node) in &self.nodes {
            let (shape, label) = match node {
                Node::StartEvent => ("circle", "start".to_string()),
                Node::EndEvent => ("doublecircle", "end".to_string()),
                Node::Task { name } => ("box", name.clone()),
                Node::Gateway { kind, .. } => (
                    "diamond",
                    match kind {
                        GatewayKind::Xor => "X".to_string(),
                        GatewayKind::And => "+".to_string(),
                        GatewayKind::Or => "O".to_string(),
                    },
                ),
            };
            let _ = writeln!(
                s,
                "  \"{}\" [shape={shape}, label=\"{}\"];",
                id,
                label.replace('"', "\\\"")
            );
        }
        for (a, b) in &self.flows {
            let _ = writeln!(s, "  \"{a}\" -> \"{b}\";");
        }
        s.push_str("}\n");
        s
    }
}

fn flow_id(from: &str, to: &str) -> String {
    format!("flow_{}__{}", sanitize_id(from), sanitize_id(to))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn diamond() -> BpmnModel {
        // start -> a -> XOR< b | c > XOR -> d -> end
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        for t in ["a", "b", "c", "d"] {
            m.add_node(format!("task_{t}"), Node::Task { name: t.to_string() });
        }
        m.add_node(
            "xor_split_1",
            Node::Gateway { kind: GatewayKind::Xor, direction: GatewayDirection::Split },
        );
        m.add_node(
            "xor_join_1",
            Node::Gateway { kind: GatewayKind::Xor, direction: GatewayDirection::Join },
        );
        m.add_flow("start", "task_a");
        m.add_flow("task_a", "xor_split_1");
        m.add_flow("xor_split_1", "task_b");
        m.add_flow("xor_split_1", "task_c");
        m.add_flow("task_b", "xor_join_1");
        m.add_flow("task_c", "xor_join_1");
        m.add_flow("xor_join_1", "task_d");
        m.add_flow("task_d", "end");
        m.gateway_pairs
            .insert("xor_split_1".into(), "xor_join_1".into());
        m
    }

    #[test]
    fn diamond_validates() {
        diamond().validate().unwrap();
    }

    #[test]
    fn missing_join_input_is_invalid() {
        let mut m = diamond();
        m.flows.remove(&("task_c".into(), "xor_join_1".into()));
        assert!(m.validate().is_err());
    }

    #[test]
    fn dangling_flow_is_invalid() {
        let mut m = diamond();
        m.add_flow("task_d", "ghost");
        assert!(m.validate().is_err());
    }

    #[test]
    fn xml_roundtrip_preserves_structure() {
        let m = diamond();
        let xml = m.to_xml();
        let back = BpmnModel::from_xml(&xml).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.flows, m.flows);
    }

    #[test]
    fn xml_export_is_deterministic() {
        let m = diamond();
        assert_eq!(m.to_xml(), m.to_xml());
        // rebuild in a different insertion order
        let mut m2 = BpmnModel::default();
        let mut entries: Vec<_> = m.nodes.clone().into_iter().collect();
        entries.reverse();
        for (id, n) in entries {
            m2.add_node(id, n);
        }
        let mut flows: Vec<_> = m.flows.clone().into_iter().collect();
        flows.reverse();
        for (a, b) in flows {
            m2.add_flow(a, b);
        }
        assert_eq!(m2.to_xml(), m.to_xml());
    }

    #[test]
    fn escaped_labels_survive_roundtrip() {
        let mut m = BpmnModel::default();
        m.add_node("start", Node::StartEvent);
        m.add_node("end", Node::EndEvent);
        m.add_node("task_1", Node::Task { name: "check <A> & \"B\"".into() });
        m.add_flow("start", "task_1");
        m.add_flow("task_1", "end");
        let back = BpmnModel::from_xml(&m.to_xml()).unwrap();
        assert_eq!(back.task_name("task_1"), Some("check <A> & \"B\""));
    }

    #[test]
    fn sanitize_produces_valid_ids() {
        assert_eq!(sanitize_id("check claim"), "check_claim");
        assert_eq!(sanitize_id("9 lives"), "_9_lives");
    }
}
