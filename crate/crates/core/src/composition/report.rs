use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::layer::{Combine, Layer};
use crate::nodes::{FunctionNode, NodeRecord};

/// One layer, with its nodes in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerRecord {
    Sequential {
        nodes: Vec<NodeRecord>,
    },
    Parallel {
        combine: Combine,
        nodes: Vec<NodeRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Conditional {
        epsilon: f64,
        condition_nodes: Vec<NodeRecord>,
        function_nodes: Vec<NodeRecord>,
    },
}

/// Machine-readable description of a whole network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<LayerRecord>,
}

fn records(nodes: &[Box<dyn FunctionNode>]) -> Vec<NodeRecord> {
    nodes.iter().map(|n| n.record()).collect()
}

impl LayerRecord {
    pub fn from_layer(layer: &Layer) -> Self {
        match layer {
            Layer::Sequential(l) => LayerRecord::Sequential {
                nodes: records(l.nodes()),
            },
            Layer::Parallel(l) => LayerRecord::Parallel {
                combine: l.combine(),
                nodes: records(l.nodes()),
                weights: (l.combine() == Combine::WeightedSum).then(|| l.weights().to_vec()),
            },
            Layer::Conditional(l) => LayerRecord::Conditional {
                epsilon: l.epsilon(),
                condition_nodes: records(l.conditions()),
                function_nodes: records(l.experts()),
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerRecord::Sequential { .. } => "sequential",
            LayerRecord::Parallel { .. } => "parallel",
            LayerRecord::Conditional { .. } => "conditional",
        }
    }
}

// Arrays longer than this are summarized in text reports.
const INLINE_LIMIT: usize = 12;

fn fmt_values(values: &[f64]) -> String {
    if values.len() == 1 {
        return format!("{:.6}", values[0]);
    }
    if values.len() <= INLINE_LIMIT {
        let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
        return format!("[{}]", parts.join(", "));
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    format!("<{} values, mean {mean:.4}, max |v| {max:.4}>", values.len())
}

fn write_node(out: &mut String, label: &str, index: usize, node: &NodeRecord) {
    let frozen = if node.trainable { "" } else { ", frozen" };
    let _ = writeln!(
        out,
        "  {label}[{index}] {} ({} -> {}{frozen})",
        node.kind, node.input_dim, node.output_dim
    );
    for (name, values) in &node.params {
        if name.starts_with("log_") {
            continue;
        }
        let _ = writeln!(out, "      {name}: {}", fmt_values(values));
    }
}

/// Human-readable rendering of a [`NetworkRecord`].
pub fn render_text(record: &NetworkRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Network {} -> {} ({} layers)",
        record.input_dim,
        record.output_dim,
        record.layers.len()
    );
    for (i, layer) in record.layers.iter().enumerate() {
        match layer {
            LayerRecord::Sequential { nodes } => {
                let _ = writeln!(out, "Layer {i}: sequential");
                for (j, n) in nodes.iter().enumerate() {
                    write_node(&mut out, "node", j, n);
                }
            }
            LayerRecord::Parallel {
                combine,
                nodes,
                weights,
            } => {
                let _ = writeln!(out, "Layer {i}: parallel ({})", combine.name());
                for (j, n) in nodes.iter().enumerate() {
                    write_node(&mut out, "node", j, n);
                }
                if let Some(w) = weights {
                    let _ = writeln!(out, "  combination weights: {}", fmt_values(w));
                }
            }
            LayerRecord::Conditional {
                epsilon,
                condition_nodes,
                function_nodes,
            } => {
                let _ = writeln!(out, "Layer {i}: conditional (epsilon {epsilon:e})");
                for (j, n) in condition_nodes.iter().enumerate() {
                    write_node(&mut out, "condition", j, n);
                }
                for (j, n) in function_nodes.iter().enumerate() {
                    write_node(&mut out, "expert", j, n);
                }
            }
        }
    }
    out
}
