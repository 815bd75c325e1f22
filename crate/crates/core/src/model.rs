//! Versioned JSON model files and the node-kind registry used to rebuild networks.
//!
//! A model file looks like
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "network": { "input_dim": 2, "output_dim": 1, "layers": [
//!     { "kind": "parallel", "combine": "sum", "nodes": [
//!       { "kind": "Gaussian", "input_dim": 2, "output_dim": 1, "trainable": true,
//!         "params": { "center": [0.1, -0.3], "width": [1.0], "log_width": [0.0] } } ] } ] },
//!   "scaler": { "means": [...], "stds": [...] },
//!   "metadata": { "seed": 42 }
//! }
//! ```
//!
//! (every parameter is stored as an array, scalars included). Readers ignore unknown fields.
//! Numbers are written in shortest round-trip form, so loading restores every finite
//! parameter bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::{
    ConditionalLayer, Layer, LayerRecord, Network, NetworkRecord, ParallelLayer, SequentialLayer,
};
use crate::data::Scaler;
use crate::error::{CfnError, Result};
use crate::nodes::{
    Angle, Exponential, FunctionNode, Gaussian, Linear, NodeKind, NodeRecord, Polynomial, Radius,
    Relu, Sigmoid, Sinusoidal, Step,
};

pub const FORMAT_VERSION: u64 = 1;

pub type NodeConstructor = fn(&NodeRecord) -> Result<Box<dyn FunctionNode>>;

/// Maps node kind names to constructors. Built-in kinds are present from the start.
#[derive(Clone)]
pub struct NodeRegistry {
    constructors: HashMap<String, NodeConstructor>,
}

fn boxed<N: FunctionNode + 'static>(r: Result<N>) -> Result<Box<dyn FunctionNode>> {
    r.map(|n| Box::new(n) as Box<dyn FunctionNode>)
}

fn builtin(kind: NodeKind) -> NodeConstructor {
    match kind {
        NodeKind::Linear => |r| boxed(Linear::from_record(r)),
        NodeKind::Gaussian => |r| boxed(Gaussian::from_record(r)),
        NodeKind::Sigmoid => |r| boxed(Sigmoid::from_record(r)),
        NodeKind::Step => |r| boxed(Step::from_record(r)),
        NodeKind::Polynomial => |r| boxed(Polynomial::from_record(r)),
        NodeKind::Sinusoidal => |r| boxed(Sinusoidal::from_record(r)),
        NodeKind::Exponential => |r| boxed(Exponential::from_record(r)),
        NodeKind::Relu => |r| boxed(Relu::from_record(r)),
        NodeKind::Radius => |r| boxed(Radius::from_record(r)),
        NodeKind::Angle => |r| boxed(Angle::from_record(r)),
    }
}

impl Default for NodeRegistry {
    fn default() -> Self {
        let constructors = NodeKind::ALL
            .into_iter()
            .map(|k| (k.name().to_string(), builtin(k)))
            .collect();
        Self { constructors }
    }
}

impl std::fmt::Debug for NodeRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut kinds: Vec<_> = self.constructors.keys().collect();
        kinds.sort();
        f.debug_struct("NodeRegistry").field("kinds", &kinds).finish()
    }
}

impl NodeRegistry {
    pub fn register(&mut self, name: &str, constructor: NodeConstructor) -> Result<()> {
        if self.constructors.contains_key(name) {
            return Err(CfnError::Usage(format!("node kind `{name}` is already registered")));
        }
        self.constructors.insert(name.to_string(), constructor);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.constructors.contains_key(name)
    }

    pub fn build(&self, rec: &NodeRecord) -> Result<Box<dyn FunctionNode>> {
        let ctor = self
            .constructors
            .get(&rec.kind)
            .ok_or_else(|| CfnError::Registry(rec.kind.clone()))?;
        let node = ctor(rec)?;
        if node.input_dim() != rec.input_dim || node.output_dim() != rec.output_dim {
            return Err(CfnError::shape(format!(
                "{} record declares {} -> {}, constructed node is {} -> {}",
                rec.kind,
                rec.input_dim,
                rec.output_dim,
                node.input_dim(),
                node.output_dim()
            )));
        }
        if node.kind() != rec.kind {
            return Err(CfnError::Format(format!(
                "constructor for `{}` produced a `{}` node",
                rec.kind,
                node.kind()
            )));
        }
        Ok(node)
    }

    fn build_all(&self, recs: &[NodeRecord], what: &str) -> Result<Vec<Box<dyn FunctionNode>>> {
        recs.iter()
            .enumerate()
            .map(|(i, r)| self.build(r).map_err(|e| e.within(format!("{what} {i}"))))
            .collect()
    }

    /// Rebuilds a network, re-running every construction-time check.
    pub fn build_network(&self, record: &NetworkRecord) -> Result<Network> {
        let mut layers = Vec::with_capacity(record.layers.len());
        for (i, lr) in record.layers.iter().enumerate() {
            let layer: Layer = match lr {
                LayerRecord::Sequential { nodes } => {
                    SequentialLayer::new(self.build_all(nodes, "node")?).map(Layer::from)
                }
                LayerRecord::Parallel {
                    combine,
                    nodes,
                    weights,
                } => {
                    let nodes = self.build_all(nodes, "node")?;
                    match weights {
                        Some(w) => ParallelLayer::with_weights(nodes, *combine, w.clone()),
                        None => ParallelLayer::new(nodes, *combine),
                    }
                    .map(Layer::from)
                }
                LayerRecord::Conditional {
                    epsilon,
                    condition_nodes,
                    function_nodes,
                } => ConditionalLayer::with_epsilon(
                    self.build_all(condition_nodes, "condition")?,
                    self.build_all(function_nodes, "expert")?,
                    *epsilon,
                )
                .map(Layer::from),
            }
            .map_err(|e| e.within(format!("layer {i} ({})", lr.kind_name())))?;
            layers.push(layer);
        }
        let net = Network::new(layers)?;
        if net.input_dim() != record.input_dim || net.output_dim() != record.output_dim {
            return Err(CfnError::shape(format!(
                "model declares {} -> {}, its layers give {} -> {}",
                record.input_dim,
                record.output_dim,
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(net)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u64,
    pub network: NetworkRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl ModelFile {
    pub fn new(net: &Network, scaler: Option<Scaler>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            network: net.describe(),
            scaler,
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| CfnError::Format(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CfnError::Format(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| CfnError::Format("missing or invalid `format_version`".into()))?;
        if version > FORMAT_VERSION || version == 0 {
            return Err(CfnError::Version {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| CfnError::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn network(&self, registry: &NodeRegistry) -> Result<Network> {
        registry.build_network(&self.network)
    }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CfnError::arg(format!("`{}` is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn save(net: &Network, scaler: Option<&Scaler>, path: &Path) -> Result<()> {
    ModelFile::new(net, scaler.cloned()).save(path)
}

pub fn load(path: &Path) -> Result<(Network, Option<Scaler>)> {
    load_with(path, &NodeRegistry::default())
}

pub fn load_with(path: &Path, registry: &NodeRegistry) -> Result<(Network, Option<Scaler>)> {
    let file = ModelFile::read(path)?;
    Ok((file.network(registry)?, file.scaler))
}
