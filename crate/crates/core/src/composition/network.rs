use super::layer::{Layer, LayerCache};
use super::report::{LayerRecord, NetworkRecord};
use crate::error::{CfnError, Result};
use crate::math::Matrix;

/// An ordered stack of composition layers trained end to end.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Per-layer caches from one forward pass.
#[derive(Debug, Clone)]
pub struct NetworkCache {
    layers: Vec<LayerCache>,
}

#[derive(Debug, Clone)]
pub struct NetworkGrad {
    /// Aligned with [`Network::param_vector`].
    pub params: Vec<f64>,
    pub input: Matrix,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(CfnError::arg("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(CfnError::shape(format!(
                    "layer {i} ({}) outputs {} columns but layer {} ({}) expects {}",
                    pair[0].kind_name(),
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].kind_name(),
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Flattened trainable parameters, layer by layer.
    pub fn param_vector(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Layer::param_vector).collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(CfnError::shape(format!(
                "network has {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut rest = values;
        for layer in &mut self.layers {
            let (head, tail) = rest.split_at(layer.param_count());
            layer.set_params(head)?;
            rest = tail;
        }
        Ok(())
    }

    /// Parameter range `start..end` of each layer within the flat vector.
    pub fn layer_offsets(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.layers
            .iter()
            .map(|l| {
                let end = start + l.param_count();
                let r = start..end;
                start = end;
                r
            })
            .collect()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut current = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            current = layer
                .forward(&current)
                .map_err(|e| e.within(format!("layer {i} ({})", layer.kind_name())))?
                .0;
        }
        Ok(current)
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, NetworkCache)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, cache) = layer
                .forward(&current)
                .map_err(|e| e.within(format!("layer {i} ({})", layer.kind_name())))?;
            caches.push(cache);
            current = y;
        }
        Ok((current, NetworkCache { layers: caches }))
    }

    /// Backpropagates `loss_grad` (gradient of the loss with respect to the network output).
    pub fn backward(&self, cache: &NetworkCache, loss_grad: &Matrix) -> Result<NetworkGrad> {
        if cache.layers.len() != self.layers.len() {
            return Err(CfnError::Usage(format!(
                "cache holds {} layers, network has {}",
                cache.layers.len(),
                self.layers.len()
            )));
        }
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut g = loss_grad.clone();
        for (i, (layer, lc)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            let lg = layer
                .backward(lc, &g)
                .map_err(|e| e.within(format!("layer {i} ({})", layer.kind_name())))?;
            per_layer.push(lg.params);
            g = lg.input;
        }
        let params = per_layer.into_iter().rev().flatten().collect();
        Ok(NetworkGrad { params, input: g })
    }

    /// Structured snapshot of every layer and node with semantic parameter names.
    pub fn describe(&self) -> NetworkRecord {
        NetworkRecord {
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
            layers: self.layers.iter().map(LayerRecord::from_layer).collect(),
        }
    }
}
