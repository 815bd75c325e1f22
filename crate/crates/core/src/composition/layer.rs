use serde::{Deserialize, Serialize};

use crate::error::{CfnError, Result};
use crate::math::Matrix;
use crate::nodes::FunctionNode;

/// Default denominator guard in conditional layers.
pub const CONDITIONAL_EPSILON: f64 = 1e-10;

/// How a parallel layer merges its node outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    Sum,
    Product,
    Concat,
    WeightedSum,
}

impl Combine {
    pub fn name(self) -> &'static str {
        match self {
            Combine::Sum => "sum",
            Combine::Product => "product",
            Combine::Concat => "concat",
            Combine::WeightedSum => "weighted_sum",
        }
    }
}

/// Nodes applied in a chain: `f_n(... f_1(x))`.
#[derive(Debug, Clone)]
pub struct SequentialLayer {
    nodes: Vec<Box<dyn FunctionNode>>,
}

/// Nodes applied to the same input, outputs merged by [`Combine`].
#[derive(Debug, Clone)]
pub struct ParallelLayer {
    nodes: Vec<Box<dyn FunctionNode>>,
    combine: Combine,
    /// One raw (unnormalized) weight per node; only used by [`Combine::WeightedSum`].
    weights: Vec<f64>,
}

/// Mixture of experts: `F(x) = sum_i c_i(x) / (sum_j c_j(x) + eps) * g_i(x)`, per row.
#[derive(Debug, Clone)]
pub struct ConditionalLayer {
    conditions: Vec<Box<dyn FunctionNode>>,
    experts: Vec<Box<dyn FunctionNode>>,
    epsilon: f64,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Sequential(SequentialLayer),
    Parallel(ParallelLayer),
    Conditional(ConditionalLayer),
}

/// Intermediates recorded by [`Layer::forward`] and consumed by [`Layer::backward`].
#[derive(Debug, Clone)]
pub enum LayerCache {
    Sequential {
        /// Input of every node in the chain.
        inputs: Vec<Matrix>,
    },
    Parallel {
        input: Matrix,
        outputs: Vec<Matrix>,
    },
    Conditional {
        input: Matrix,
        conditions: Vec<Matrix>,
        experts: Vec<Matrix>,
        output: Matrix,
    },
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub input: Matrix,
    /// Aligned with [`Layer::param_vector`].
    pub params: Vec<f64>,
}

fn forward_node(node: &dyn FunctionNode, x: &Matrix, label: &str, i: usize) -> Result<Matrix> {
    node.forward(x).map_err(|e| e.within(format!("{label} node {i}")))
}

fn concat_params<'a>(nodes: impl Iterator<Item = &'a Box<dyn FunctionNode>>) -> Vec<f64> {
    nodes.flat_map(|n| n.param_vector()).collect()
}

/// Distributes `values` over `nodes` in order; returns the unconsumed tail.
fn scatter_params<'v>(
    nodes: &mut [Box<dyn FunctionNode>],
    mut values: &'v [f64],
) -> Result<&'v [f64]> {
    for node in nodes {
        let n = node.param_count();
        if values.len() < n {
            return Err(CfnError::shape("parameter vector too short for layer"));
        }
        let (head, tail) = values.split_at(n);
        node.set_params(head)?;
        values = tail;
    }
    Ok(values)
}

impl SequentialLayer {
    pub fn new(nodes: Vec<Box<dyn FunctionNode>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(CfnError::arg("sequential layer needs at least one node"));
        }
        for (i, pair) in nodes.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(CfnError::shape(format!(
                    "sequential node {i} ({}) outputs {} columns but node {} ({}) expects {}",
                    pair[0].kind(),
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].kind(),
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Box<dyn FunctionNode>] {
        &self.nodes
    }
}

impl ParallelLayer {
    pub fn new(nodes: Vec<Box<dyn FunctionNode>>, combine: Combine) -> Result<Self> {
        let n = nodes.len();
        Self::with_weights(nodes, combine, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn with_weights(
        nodes: Vec<Box<dyn FunctionNode>>,
        combine: Combine,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let first = nodes
            .first()
            .ok_or_else(|| CfnError::arg("parallel layer needs at least one node"))?;
        let (input_dim, output_dim) = (first.input_dim(), first.output_dim());
        for (i, node) in nodes.iter().enumerate() {
            if node.input_dim() != input_dim {
                return Err(CfnError::shape(format!(
                    "parallel node {i} ({}) expects {} input columns, node 0 expects {input_dim}",
                    node.kind(),
                    node.input_dim()
                )));
            }
            if combine != Combine::Concat && node.output_dim() != output_dim {
                return Err(CfnError::shape(format!(
                    "parallel {} needs equal output dims: node {i} ({}) has {}, node 0 has {output_dim}",
                    combine.name(),
                    node.kind(),
                    node.output_dim()
                )));
            }
        }
        if weights.len() != nodes.len() {
            return Err(CfnError::shape(format!(
                "parallel layer has {} nodes but {} combination weights",
                nodes.len(),
                weights.len()
            )));
        }
        Ok(Self {
            nodes,
            combine,
            weights,
        })
    }

    pub fn nodes(&self) -> &[Box<dyn FunctionNode>] {
        &self.nodes
    }

    pub fn combine(&self) -> Combine {
        self.combine
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl ConditionalLayer {
    pub fn new(
        conditions: Vec<Box<dyn FunctionNode>>,
        experts: Vec<Box<dyn FunctionNode>>,
    ) -> Result<Self> {
        Self::with_epsilon(conditions, experts, CONDITIONAL_EPSILON)
    }

    pub fn with_epsilon(
        conditions: Vec<Box<dyn FunctionNode>>,
        experts: Vec<Box<dyn FunctionNode>>,
        epsilon: f64,
    ) -> Result<Self> {
        if conditions.is_empty() || conditions.len() != experts.len() {
            return Err(CfnError::arg(format!(
                "conditional layer needs matching non-empty condition and expert lists, got {} and {}",
                conditions.len(),
                experts.len()
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CfnError::arg("conditional epsilon must be positive"));
        }
        let input_dim = conditions[0].input_dim();
        let output_dim = experts[0].output_dim();
        for (i, c) in conditions.iter().enumerate() {
            if c.output_dim() != 1 {
                return Err(CfnError::shape(format!(
                    "condition node {i} ({}) must have scalar output, has {}",
                    c.kind(),
                    c.output_dim()
                )));
            }
            if c.input_dim() != input_dim {
                return Err(CfnError::shape(format!(
                    "condition node {i} expects {} input columns, expected {input_dim}",
                    c.input_dim()
                )));
            }
        }
        for (i, g) in experts.iter().enumerate() {
            if g.input_dim() != input_dim {
                return Err(CfnError::shape(format!(
                    "expert node {i} expects {} input columns, expected {input_dim}",
                    g.input_dim()
                )));
            }
            if g.output_dim() != output_dim {
                return Err(CfnError::shape(format!(
                    "expert node {i} has output dim {}, expert 0 has {output_dim}",
                    g.output_dim()
                )));
            }
        }
        Ok(Self {
            conditions,
            experts,
            epsilon,
        })
    }

    pub fn conditions(&self) -> &[Box<dyn FunctionNode>] {
        &self.conditions
    }

    pub fn experts(&self) -> &[Box<dyn FunctionNode>] {
        &self.experts
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn condition_outputs(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        self.conditions
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let out = forward_node(c.as_ref(), x, "condition", i)?;
                if out.as_slice().iter().any(|&v| v < 0.0) {
                    return Err(CfnError::numeric(
                        format!("condition node {i} ({})", c.kind()),
                        "negative gate value",
                    ));
                }
                Ok(out)
            })
            .collect()
    }

    /// Normalized gate weights, `batch x experts`.
    pub fn gate_weights(&self, x: &Matrix) -> Result<Matrix> {
        let cond = self.condition_outputs(x)?;
        Ok(self.normalize(&cond, x.rows()))
    }

    fn normalize(&self, cond: &[Matrix], rows: usize) -> Matrix {
        let mut w = Matrix::zeros(rows, cond.len());
        for r in 0..rows {
            let denom = cond.iter().map(|c| c.get(r, 0)).sum::<f64>() + self.epsilon;
            for (i, c) in cond.iter().enumerate() {
                w.set(r, i, c.get(r, 0) / denom);
            }
        }
        w
    }
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Sequential(_) => "sequential",
            Layer::Parallel(_) => "parallel",
            Layer::Conditional(_) => "conditional",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Sequential(l) => l.nodes[0].input_dim(),
            Layer::Parallel(l) => l.nodes[0].input_dim(),
            Layer::Conditional(l) => l.conditions[0].input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Layer::Sequential(l) => l.nodes.last().expect("non-empty").output_dim(),
            Layer::Parallel(l) => match l.combine {
                Combine::Concat => l.nodes.iter().map(|n| n.output_dim()).sum(),
                _ => l.nodes[0].output_dim(),
            },
            Layer::Conditional(l) => l.experts[0].output_dim(),
        }
    }

    /// All nodes in parameter order (conditions before experts).
    pub fn nodes(&self) -> Box<dyn Iterator<Item = &Box<dyn FunctionNode>> + '_> {
        match self {
            Layer::Sequential(l) => Box::new(l.nodes.iter()),
            Layer::Parallel(l) => Box::new(l.nodes.iter()),
            Layer::Conditional(l) => Box::new(l.conditions.iter().chain(l.experts.iter())),
        }
    }

    fn has_trainable_weights(&self) -> bool {
        matches!(self, Layer::Parallel(l) if l.combine == Combine::WeightedSum)
    }

    pub fn param_count(&self) -> usize {
        let own = match self {
            Layer::Parallel(l) if self.has_trainable_weights() => l.weights.len(),
            _ => 0,
        };
        self.nodes().map(|n| n.param_count()).sum::<usize>() + own
    }

    /// Node parameters in node order; weighted-sum weights last.
    pub fn param_vector(&self) -> Vec<f64> {
        let mut v = concat_params(self.nodes());
        if let Layer::Parallel(l) = self {
            if l.combine == Combine::WeightedSum {
                v.extend_from_slice(&l.weights);
            }
        }
        v
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(CfnError::shape(format!(
                "{} layer has {} parameters, got {}",
                self.kind_name(),
                self.param_count(),
                values.len()
            )));
        }
        let rest = match self {
            Layer::Sequential(l) => scatter_params(&mut l.nodes, values)?,
            Layer::Parallel(l) => {
                let rest = scatter_params(&mut l.nodes, values)?;
                if l.combine == Combine::WeightedSum {
                    l.weights.copy_from_slice(rest);
                    &[]
                } else {
                    rest
                }
            }
            Layer::Conditional(l) => {
                let rest = scatter_params(&mut l.conditions, values)?;
                scatter_params(&mut l.experts, rest)?
            }
        };
        debug_assert!(rest.is_empty());
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, LayerCache)> {
        if x.cols() != self.input_dim() {
            return Err(CfnError::shape(format!(
                "{} layer expects {} input columns, got {}",
                self.kind_name(),
                self.input_dim(),
                x.cols()
            )));
        }
        match self {
            Layer::Sequential(l) => {
                let mut inputs = Vec::with_capacity(l.nodes.len());
                let mut current = x.clone();
                for (i, node) in l.nodes.iter().enumerate() {
                    let next = forward_node(node.as_ref(), &current, "sequential", i)?;
                    inputs.push(std::mem::replace(&mut current, next));
                }
                Ok((current, LayerCache::Sequential { inputs }))
            }
            Layer::Parallel(l) => {
                let outputs = l
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, n)| forward_node(n.as_ref(), x, "parallel", i))
                    .collect::<Result<Vec<_>>>()?;
                let y = combine_outputs(l, &outputs)?;
                if !y.is_finite() {
                    return Err(CfnError::numeric(
                        format!("parallel {}", l.combine.name()),
                        "non-finite combined output",
                    ));
                }
                Ok((
                    y,
                    LayerCache::Parallel {
                        input: x.clone(),
                        outputs,
                    },
                ))
            }
            Layer::Conditional(l) => {
                let conditions = l.condition_outputs(x)?;
                let experts = l
                    .experts
                    .iter()
                    .enumerate()
                    .map(|(i, g)| forward_node(g.as_ref(), x, "expert", i))
                    .collect::<Result<Vec<_>>>()?;
                let w = l.normalize(&conditions, x.rows());
                let mut y = Matrix::zeros(x.rows(), self.output_dim());
                for r in 0..x.rows() {
                    let out = y.row_mut(r);
                    for (i, g) in experts.iter().enumerate() {
                        let wi = w.get(r, i);
                        for (o, &v) in out.iter_mut().zip(g.row(r)) {
                            *o += wi * v;
                        }
                    }
                }
                Ok((
                    y.clone(),
                    LayerCache::Conditional {
                        input: x.clone(),
                        conditions,
                        experts,
                        output: y,
                    },
                ))
            }
        }
    }

    pub fn backward(&self, cache: &LayerCache, upstream: &Matrix) -> Result<LayerGrad> {
        self.check_cache(cache, upstream)?;
        match (self, cache) {
            (Layer::Sequential(l), LayerCache::Sequential { inputs }) => {
                let mut grads: Vec<Vec<f64>> = Vec::with_capacity(l.nodes.len());
                let mut g = upstream.clone();
                for (node, input) in l.nodes.iter().zip(inputs).rev() {
                    let ng = node.backward(input, &g)?;
                    grads.push(ng.params);
                    g = ng.input;
                }
                let params = grads.into_iter().rev().flatten().collect();
                Ok(LayerGrad { input: g, params })
            }
            (Layer::Parallel(l), LayerCache::Parallel { input, outputs }) => {
                let mut gx = Matrix::zeros(input.rows(), input.cols());
                let mut params = Vec::with_capacity(self.param_count());
                let mut offset = 0;
                for (i, (node, out)) in l.nodes.iter().zip(outputs).enumerate() {
                    let g_out = match l.combine {
                        Combine::Sum => upstream.clone(),
                        Combine::WeightedSum => upstream.scale(l.weights[i]),
                        Combine::Concat => {
                            let block = upstream.col_block(offset, out.cols());
                            offset += out.cols();
                            block
                        }
                        Combine::Product => {
                            let mut g = upstream.clone();
                            for (j, other) in outputs.iter().enumerate() {
                                if j != i {
                                    g = g.hadamard(other)?;
                                }
                            }
                            g
                        }
                    };
                    let ng = node.backward(input, &g_out)?;
                    gx.add_assign(&ng.input)?;
                    params.extend(ng.params);
                }
                if l.combine == Combine::WeightedSum {
                    params.extend(outputs.iter().map(|o| o.hadamard(upstream).expect("same shape").sum()));
                }
                Ok(LayerGrad { input: gx, params })
            }
            (
                Layer::Conditional(l),
                LayerCache::Conditional {
                    input,
                    conditions,
                    experts,
                    output,
                },
            ) => {
                let rows = input.rows();
                let denom: Vec<f64> = (0..rows)
                    .map(|r| conditions.iter().map(|c| c.get(r, 0)).sum::<f64>() + l.epsilon)
                    .collect();
                let mut gx = Matrix::zeros(input.rows(), input.cols());
                let mut cond_params = Vec::new();
                // dF/dc_i = (g_i - F) / S, per row
                for (cond, g) in l.conditions.iter().zip(experts) {
                    let gc: Vec<f64> = (0..rows)
                        .map(|r| {
                            let diff: f64 = upstream
                                .row(r)
                                .iter()
                                .zip(g.row(r).iter().zip(output.row(r)))
                                .map(|(u, (gi, f))| u * (gi - f))
                                .sum();
                            diff / denom[r]
                        })
                        .collect();
                    let ng = cond.backward(input, &Matrix::column(&gc))?;
                    gx.add_assign(&ng.input)?;
                    cond_params.extend(ng.params);
                }
                let mut expert_params = Vec::new();
                for (expert, c) in l.experts.iter().zip(conditions) {
                    let mut g_out = upstream.clone();
                    for r in 0..rows {
                        let w = c.get(r, 0) / denom[r];
                        for v in g_out.row_mut(r) {
                            *v *= w;
                        }
                    }
                    let ng = expert.backward(input, &g_out)?;
                    gx.add_assign(&ng.input)?;
                    expert_params.extend(ng.params);
                }
                cond_params.extend(expert_params);
                Ok(LayerGrad {
                    input: gx,
                    params: cond_params,
                })
            }
            _ => unreachable!("check_cache verified the variant"),
        }
    }

    fn check_cache(&self, cache: &LayerCache, upstream: &Matrix) -> Result<()> {
        let (ok, rows) = match (self, cache) {
            (Layer::Sequential(l), LayerCache::Sequential { inputs }) => (
                inputs.len() == l.nodes.len()
                    && inputs.iter().zip(&l.nodes).all(|(m, n)| m.cols() == n.input_dim()),
                inputs.first().map_or(0, Matrix::rows),
            ),
            (Layer::Parallel(l), LayerCache::Parallel { input, outputs }) => (
                outputs.len() == l.nodes.len() && input.cols() == self.input_dim(),
                input.rows(),
            ),
            (
                Layer::Conditional(l),
                LayerCache::Conditional {
                    input,
                    conditions,
                    experts,
                    ..
                },
            ) => (
                conditions.len() == l.conditions.len()
                    && experts.len() == l.experts.len()
                    && input.cols() == self.input_dim(),
                input.rows(),
            ),
            _ => (false, 0),
        };
        if !ok {
            return Err(CfnError::Usage(format!(
                "cache does not come from a forward pass of this {} layer",
                self.kind_name()
            )));
        }
        if upstream.shape() != (rows, self.output_dim()) {
            return Err(CfnError::shape(format!(
                "{} layer upstream gradient is {}x{}, expected {}x{}",
                self.kind_name(),
                upstream.rows(),
                upstream.cols(),
                rows,
                self.output_dim()
            )));
        }
        Ok(())
    }
}

fn combine_outputs(l: &ParallelLayer, outputs: &[Matrix]) -> Result<Matrix> {
    match l.combine {
        Combine::Concat => Matrix::hconcat(outputs),
        Combine::Sum => {
            let mut acc = outputs[0].clone();
            for o in &outputs[1..] {
                acc.add_assign(o)?;
            }
            Ok(acc)
        }
        Combine::Product => {
            let mut acc = outputs[0].clone();
            for o in &outputs[1..] {
                acc = acc.hadamard(o)?;
            }
            Ok(acc)
        }
        Combine::WeightedSum => {
            let mut acc = Matrix::zeros(outputs[0].rows(), outputs[0].cols());
            for (w, o) in l.weights.iter().zip(outputs) {
                acc.add_scaled(*w, o)?;
            }
            Ok(acc)
        }
    }
}

impl From<SequentialLayer> for Layer {
    fn from(l: SequentialLayer) -> Self {
        Layer::Sequential(l)
    }
}

impl From<ParallelLayer> for Layer {
    fn from(l: ParallelLayer) -> Self {
        Layer::Parallel(l)
    }
}

impl From<ConditionalLayer> for Layer {
    fn from(l: ConditionalLayer) -> Self {
        Layer::Conditional(l)
    }
}
