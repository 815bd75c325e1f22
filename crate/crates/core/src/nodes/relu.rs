use super::{check_len, check_record, FunctionNode, NodeRecord, ParamMap};
use crate::error::{CfnError, Result};
use crate::math::Matrix;

/// Elementwise `max(0, x)`.
#[derive(Debug, Clone)]
pub struct Relu {
    dim: usize,
    trainable: bool,
}

impl Relu {
    pub fn new(dim: usize) -> Self {
        Self { dim, trainable: true }
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "ReLU")?;
        if rec.input_dim != rec.output_dim {
            return Err(CfnError::shape("ReLU output_dim must equal input_dim"));
        }
        Ok(Self {
            dim: rec.input_dim,
            trainable: rec.trainable,
        })
    }
}

impl FunctionNode for Relu {
    fn kind(&self) -> &str {
        "ReLU"
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn is_trainable(&self) -> bool {
        self.trainable
    }

    fn set_trainable(&mut self, trainable: bool) {
        self.trainable = trainable;
    }

    fn raw_layout(&self) -> &'static [&'static str] {
        &[]
    }

    fn raw_params(&self) -> Vec<f64> {
        Vec::new()
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        check_len("ReLU", values, 0)
    }

    fn params(&self) -> ParamMap {
        ParamMap::new()
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        x.map(|v| v.max(0.0))
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let gx = x
            .as_slice()
            .iter()
            .zip(upstream.as_slice())
            .map(|(&xv, &u)| if xv > 0.0 { u } else { 0.0 })
            .collect();
        (
            Matrix::from_vec(x.rows(), x.cols(), gx).expect("sized"),
            Vec::new(),
        )
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
