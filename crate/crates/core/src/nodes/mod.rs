//! Elementary interpretable function nodes.
//!
//! Every node maps a `batch x input_dim` matrix to `batch x output_dim`, row by row, and
//! implements its own backward rule: given the upstream gradient it returns the gradient with
//! respect to its input and with respect to its *unconstrained* parameter vector. Positive
//! quantities (Gaussian width, Step sharpness) are stored as logarithms, so the parameter
//! vector can be updated freely by the optimizer.
//!
//! Parameter vector layout per kind:
//!
//! | kind        | layout                                         |
//! |-------------|------------------------------------------------|
//! | Linear      | `weights` (row-major, out x in), `bias`        |
//! | Gaussian    | `center`, `log_width`                          |
//! | Sigmoid     | `direction`, `offset`, `steepness`             |
//! | Step        | `direction`, `offset`, `log_sharpness`         |
//! | Polynomial  | `direction`, `coefficients` (a0 .. aD)         |
//! | Sinusoidal  | `amplitude`, `frequency`, `phase`, `direction` |
//! | Exponential | `direction`, `offset`                          |
//! | ReLU, Radius, Angle | (none)                                 |

mod exponential;
mod gaussian;
mod linear;
mod polar;
mod polynomial;
mod relu;
mod sigmoid;
mod sinusoidal;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{CfnError, Result};
use crate::math::{Matrix, Rng};

pub use exponential::{Exponential, DEFAULT_EXP_CLAMP};
pub use gaussian::Gaussian;
pub use linear::Linear;
pub use polar::{Angle, Radius};
pub use polynomial::Polynomial;
pub use relu::Relu;
pub use sigmoid::{Sigmoid, Step};
pub use sinusoidal::{canonical_sinusoid, Sinusoidal};

/// Named parameter arrays in a fixed, kind-specific order.
pub type ParamMap = IndexMap<String, Vec<f64>>;

/// Gradients produced by a node's backward pass.
#[derive(Debug, Clone)]
pub struct NodeGrad {
    pub input: Matrix,
    /// Aligned with [`FunctionNode::param_vector`]; empty for frozen nodes.
    pub params: Vec<f64>,
}

/// A parameterized elementary function with explicit forward and backward rules.
///
/// Implementors provide the `*_unchecked` kernels and the raw parameter accessors; the
/// provided methods add shape validation, finiteness checks and the trainable gate.
pub trait FunctionNode: fmt::Debug + Send + Sync {
    fn kind(&self) -> &str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn is_trainable(&self) -> bool;
    fn set_trainable(&mut self, trainable: bool);

    /// Names of the [`FunctionNode::params`] entries whose concatenation is the raw vector.
    fn raw_layout(&self) -> &'static [&'static str];
    /// Unconstrained parameters, independent of the trainable flag.
    fn raw_params(&self) -> Vec<f64>;
    fn set_raw_params(&mut self, values: &[f64]) -> Result<()>;

    fn raw_param_count(&self) -> usize {
        self.raw_params().len()
    }

    /// Semantic parameters: every raw entry plus derived readable values such as `width`.
    fn params(&self) -> ParamMap;

    /// Forward on a matrix whose column count is already validated.
    fn forward_unchecked(&self, x: &Matrix) -> Matrix;

    /// Backward on validated shapes: gradient of `sum(upstream * f(x))` with respect to
    /// `x` and to the raw parameters.
    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>);

    fn clone_box(&self) -> Box<dyn FunctionNode>;

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(CfnError::shape(format!(
                "{} node expects {} input columns, got {}",
                self.kind(),
                self.input_dim(),
                x.cols()
            )));
        }
        let y = self.forward_unchecked(x);
        if !y.is_finite() {
            return Err(CfnError::numeric(
                format!("{} node", self.kind()),
                "non-finite output",
            ));
        }
        Ok(y)
    }

    fn backward(&self, x: &Matrix, upstream: &Matrix) -> Result<NodeGrad> {
        if x.cols() != self.input_dim() {
            return Err(CfnError::shape(format!(
                "{} node expects {} input columns, got {}",
                self.kind(),
                self.input_dim(),
                x.cols()
            )));
        }
        if upstream.shape() != (x.rows(), self.output_dim()) {
            return Err(CfnError::shape(format!(
                "{} node upstream gradient is {}x{}, expected {}x{}",
                self.kind(),
                upstream.rows(),
                upstream.cols(),
                x.rows(),
                self.output_dim()
            )));
        }
        let (input, params) = self.backward_unchecked(x, upstream);
        let params = if self.is_trainable() { params } else { Vec::new() };
        Ok(NodeGrad { input, params })
    }

    /// Number of trainable parameters (zero for frozen nodes).
    fn param_count(&self) -> usize {
        if self.is_trainable() {
            self.raw_param_count()
        } else {
            0
        }
    }

    /// Trainable parameter vector; empty for frozen nodes.
    fn param_vector(&self) -> Vec<f64> {
        if self.is_trainable() {
            self.raw_params()
        } else {
            Vec::new()
        }
    }

    fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if !self.is_trainable() {
            if !values.is_empty() {
                return Err(CfnError::shape(format!(
                    "frozen {} node takes no parameters, got {}",
                    self.kind(),
                    values.len()
                )));
            }
            return Ok(());
        }
        if values.len() != self.raw_param_count() {
            return Err(CfnError::shape(format!(
                "{} node has {} parameters, got {}",
                self.kind(),
                self.raw_param_count(),
                values.len()
            )));
        }
        self.set_raw_params(values)
    }

    fn record(&self) -> NodeRecord {
        NodeRecord {
            kind: self.kind().to_string(),
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
            trainable: self.is_trainable(),
            params: self.params(),
        }
    }
}

impl Clone for Box<dyn FunctionNode> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Self-describing snapshot of one node, shared by reports and model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub kind: String,
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(default = "default_trainable")]
    pub trainable: bool,
    #[serde(default)]
    pub params: ParamMap,
}

fn default_trainable() -> bool {
    true
}

impl NodeRecord {
    /// Fetches a named array and checks its length.
    pub fn take(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        let values = self.params.get(name).ok_or_else(|| {
            CfnError::Format(format!("{} node is missing parameter `{name}`", self.kind))
        })?;
        if values.len() != len {
            return Err(CfnError::shape(format!(
                "{} node parameter `{name}` has length {}, expected {len}",
                self.kind,
                values.len()
            )));
        }
        Ok(values.clone())
    }

    pub fn take_scalar(&self, name: &str) -> Result<f64> {
        Ok(self.take(name, 1)?[0])
    }

    /// Raw parameter vector reassembled from `layout`, in order.
    pub fn raw_from_layout(&self, layout: &[&str]) -> Vec<f64> {
        layout
            .iter()
            .filter_map(|name| self.params.get(*name))
            .flat_map(|v| v.iter().copied())
            .collect()
    }
}

/// Built-in node kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Linear,
    Gaussian,
    Sigmoid,
    Polynomial,
    Sinusoidal,
    #[serde(rename = "ReLU")]
    Relu,
    Exponential,
    Step,
    /// Euclidean norm of the input, a fixed polar feature.
    Radius,
    /// `atan2(x1, x0)` of the first two input columns, a fixed polar feature.
    Angle,
}

impl NodeKind {
    pub const ALL: [NodeKind; 10] = [
        NodeKind::Linear,
        NodeKind::Gaussian,
        NodeKind::Sigmoid,
        NodeKind::Polynomial,
        NodeKind::Sinusoidal,
        NodeKind::Relu,
        NodeKind::Exponential,
        NodeKind::Step,
        NodeKind::Radius,
        NodeKind::Angle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Linear => "Linear",
            NodeKind::Gaussian => "Gaussian",
            NodeKind::Sigmoid => "Sigmoid",
            NodeKind::Polynomial => "Polynomial",
            NodeKind::Sinusoidal => "Sinusoidal",
            NodeKind::Relu => "ReLU",
            NodeKind::Exponential => "Exponential",
            NodeKind::Step => "Step",
            NodeKind::Radius => "Radius",
            NodeKind::Angle => "Angle",
        }
    }

    pub fn from_name(name: &str) -> Option<NodeKind> {
        NodeKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape-level description of a node, used to construct and initialize it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub trainable: bool,
    /// Polynomial degree; ignored by other kinds.
    pub degree: usize,
}

impl NodeSpec {
    fn scalar(kind: NodeKind, input_dim: usize) -> Self {
        Self {
            kind,
            input_dim,
            output_dim: 1,
            trainable: true,
            degree: 0,
        }
    }

    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        Self {
            kind: NodeKind::Linear,
            input_dim,
            output_dim,
            trainable: true,
            degree: 0,
        }
    }

    pub fn gaussian(input_dim: usize) -> Self {
        Self::scalar(NodeKind::Gaussian, input_dim)
    }

    pub fn sigmoid(input_dim: usize) -> Self {
        Self::scalar(NodeKind::Sigmoid, input_dim)
    }

    pub fn step(input_dim: usize) -> Self {
        Self::scalar(NodeKind::Step, input_dim)
    }

    pub fn polynomial(input_dim: usize, degree: usize) -> Self {
        Self {
            degree,
            ..Self::scalar(NodeKind::Polynomial, input_dim)
        }
    }

    pub fn sinusoidal(input_dim: usize) -> Self {
        Self::scalar(NodeKind::Sinusoidal, input_dim)
    }

    pub fn exponential(input_dim: usize) -> Self {
        Self::scalar(NodeKind::Exponential, input_dim)
    }

    pub fn relu(dim: usize) -> Self {
        Self {
            kind: NodeKind::Relu,
            input_dim: dim,
            output_dim: dim,
            trainable: true,
            degree: 0,
        }
    }

    pub fn radius(input_dim: usize) -> Self {
        Self::scalar(NodeKind::Radius, input_dim)
    }

    pub fn angle() -> Self {
        Self::scalar(NodeKind::Angle, 2)
    }

    pub fn frozen(mut self) -> Self {
        self.trainable = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(CfnError::arg(format!(
                "{} node needs positive dimensions, got {} -> {}",
                self.kind, self.input_dim, self.output_dim
            )));
        }
        match self.kind {
            NodeKind::Linear => {}
            NodeKind::Relu => {
                if self.output_dim != self.input_dim {
                    return Err(CfnError::arg("ReLU output_dim must equal input_dim"));
                }
            }
            NodeKind::Angle if self.input_dim < 2 => {
                return Err(CfnError::arg("Angle node needs at least 2 input columns"));
            }
            _ => {
                if self.output_dim != 1 {
                    return Err(CfnError::arg(format!(
                        "{} node has scalar output, got output_dim {}",
                        self.kind, self.output_dim
                    )));
                }
                if self.kind == NodeKind::Polynomial && self.degree == 0 {
                    return Err(CfnError::arg("Polynomial degree must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Builds the node with default initialization drawn from `rng`.
    pub fn init(&self, rng: &mut Rng) -> Result<Box<dyn FunctionNode>> {
        self.validate()?;
        let d = self.input_dim;
        let mut node: Box<dyn FunctionNode> = match self.kind {
            NodeKind::Linear => Box::new(Linear::init(d, self.output_dim, rng)),
            NodeKind::Gaussian => Box::new(Gaussian::init(d, rng)),
            NodeKind::Sigmoid => Box::new(Sigmoid::init(d, rng)),
            NodeKind::Step => Box::new(Step::init(d, rng)),
            NodeKind::Polynomial => Box::new(Polynomial::init(d, self.degree, rng)),
            NodeKind::Sinusoidal => Box::new(Sinusoidal::init(d, rng)),
            NodeKind::Exponential => Box::new(Exponential::init(d, rng)),
            NodeKind::Relu => Box::new(Relu::new(d)),
            NodeKind::Radius => Box::new(Radius::new(d)),
            NodeKind::Angle => Box::new(Angle::new(d)),
        };
        node.set_trainable(self.trainable);
        Ok(node)
    }
}

/// Per-row projection `x . d`.
pub(crate) fn project(x: &Matrix, direction: &[f64]) -> Vec<f64> {
    (0..x.rows())
        .map(|r| crate::math::dot(x.row(r), direction))
        .collect()
}

/// Backward through a scalar projection `p = x . d`: given `dp[r] = dL/dp` for each row,
/// returns `(dL/dx, dL/dd)`.
pub(crate) fn project_backward(x: &Matrix, direction: &[f64], dp: &[f64]) -> (Matrix, Vec<f64>) {
    let mut gx = Matrix::zeros(x.rows(), x.cols());
    let mut gd = vec![0.0; direction.len()];
    for (r, &g) in dp.iter().enumerate() {
        let xr = x.row(r);
        for ((o, &di), (gdi, &xi)) in gx.row_mut(r).iter_mut().zip(direction).zip(gd.iter_mut().zip(xr)) {
            *o = g * di;
            *gdi += g * xi;
        }
    }
    (gx, gd)
}

pub(crate) fn check_len(kind: &str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(CfnError::shape(format!(
            "{kind} node has {expected} parameters, got {}",
            values.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_record(rec: &NodeRecord, kind: &str) -> Result<()> {
    if rec.kind != kind {
        return Err(CfnError::Format(format!(
            "record of kind `{}` handed to the {kind} constructor",
            rec.kind
        )));
    }
    if rec.input_dim == 0 || rec.output_dim == 0 {
        return Err(CfnError::shape(format!("{kind} node with zero dimension")));
    }
    Ok(())
}

pub(crate) fn check_scalar_output(rec: &NodeRecord) -> Result<()> {
    if rec.output_dim != 1 {
        return Err(CfnError::shape(format!(
            "{} node has scalar output, record says {}",
            rec.kind, rec.output_dim
        )));
    }
    Ok(())
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests;
