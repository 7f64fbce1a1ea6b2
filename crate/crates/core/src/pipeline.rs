//! End-to-end discovery: event log in, BPMN model out.

use crate::bpmn::BpmnModel;
use crate::concurrency::{
    classic_concurrency, count_overlaps, prune_dfg, refined_concurrency, ConcurrencyRelation,
    ConcurrencyStats,
};
use crate::dfg::{build_dfg, build_projected_dfg, discover_loops, Dfg, RelationMode};
use crate::error::Result;
use crate::event_log::RefinedLog;
use crate::filter::{filter_dfg, FilterConfig};
use crate::synthesis::{detect_or_splits, repair_improper_completion, synthesize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    /// Interval-overlap concurrency over the refined graph (default).
    Refined,
    /// Order-flip concurrency over the end-event projection.
    Classic,
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub epsilon: f64,
    pub eta: f64,
    pub oracle: Oracle,
    pub filter_enabled: bool,
    pub loop_repair: bool,
    pub or_detection: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            epsilon: 0.25,
            eta: 0.4,
            oracle: Oracle::Refined,
            filter_enabled: true,
            loop_repair: true,
            or_detection: true,
        }
    }
}

/// Everything the pipeline produced, including intermediates for export
/// and reporting.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub model: BpmnModel,
    pub dfg: Dfg,
    pub filtered: Dfg,
    pub stats: ConcurrencyStats,
    pub relation: ConcurrencyRelation,
    pub or_converted: Vec<String>,
    pub or_skipped: Vec<String>,
    pub repaired_splits: Vec<String>,
}

impl Discovery {
    /// One line per stage, for progress reporting.
    pub fn summary(&self, log: &RefinedLog) -> Vec<String> {
        vec![
            format!(
                "log: {} traces, {} events, {} activities",
                log.traces.len(),
                log.total_events(),
                log.alphabet.len()
            ),
            format!(
                "graph: {} edges ({} from start, {} to end), {} self-loops, {} short-loops",
                self.dfg.edges.len(),
                self.dfg.source_edges.len(),
                self.dfg.sink_edges.len(),
                self.dfg.self_loops.len(),
                self.dfg.short_loops.len()
            ),
            format!(
                "concurrency: {} pairs at epsilon {}",
                self.relation.pairs.len(),
                self.relation.epsilon
            ),
            format!("filtered graph: {} edges", self.filtered.edges.len()),
            format!(
                "model: {} nodes, {} flows, {} gateways ({} repaired, {} OR-converted)",
                self.model.nodes.len(),
                self.model.flows.len(),
                self.model.nodes.values().filter(|n| n.is_gateway()).count(),
                self.repaired_splits.len(),
                self.or_converted.len()
            ),
        ]
    }
}

pub fn discover(log: &RefinedLog, config: &PipelineConfig) -> Result<Discovery> {
    let stats = count_overlaps(log)?;
    let (dfg, relation) = match config.oracle {
        Oracle::Refined => {
            let dfg = discover_loops(build_dfg(log, RelationMode::Refined)?, log);
            let relation = refined_concurrency(&stats, &dfg, config.epsilon)?;
            (dfg, relation)
        }
        Oracle::Classic => {
            let dfg = discover_loops(build_projected_dfg(log)?, log);
            let relation = classic_concurrency(&dfg, log, config.epsilon)?;
            (dfg, relation)
        }
    };
    let pruned = prune_dfg(&dfg, &relation);
    let filtered = if config.filter_enabled {
        filter_dfg(&pruned, &FilterConfig { eta: config.eta })?
    } else {
        pruned
    };
    let mut model = synthesize(&filtered, &relation)?;
    let repaired_splits = if config.loop_repair {
        repair_improper_completion(&mut model)
    } else {
        Vec::new()
    };
    let (or_converted, or_skipped) = if config.or_detection {
        detect_or_splits(&mut model, &stats)
    } else {
        (Vec::new(), Vec::new())
    };
    model.validate()?;
    Ok(Discovery {
        model,
        dfg,
        filtered,
        stats,
        relation,
        or_converted,
        or_skipped,
        repaired_splits,
    })
}
