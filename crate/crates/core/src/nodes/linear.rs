use super::{check_len, check_record, FunctionNode, NodeRecord, ParamMap};
use crate::error::Result;
use crate::math::{Dist, Matrix, Rng};

/// `f(x) = W x + b`.
#[derive(Debug, Clone)]
pub struct Linear {
    /// `output_dim x input_dim`.
    weights: Matrix,
    bias: Vec<f64>,
    trainable: bool,
}

const LAYOUT: &[&str] = &["weights", "bias"];

impl Linear {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        check_len("Linear bias", &bias, weights.rows())?;
        Ok(Self {
            weights,
            bias,
            trainable: true,
        })
    }

    /// He-initialized weights, zero bias.
    pub fn init(input_dim: usize, output_dim: usize, rng: &mut Rng) -> Self {
        let data = (0..input_dim * output_dim)
            .map(|_| {
                rng.sample(Dist::He { fan_in: input_dim })
                    .expect("input_dim validated >= 1")
            })
            .collect();
        Self {
            weights: Matrix::from_vec(output_dim, input_dim, data).expect("sized"),
            bias: vec![0.0; output_dim],
            trainable: true,
        }
    }

    /// Frozen identity map, used as an input passthrough.
    pub fn passthrough(dim: usize) -> Self {
        Self {
            weights: Matrix::identity(dim),
            bias: vec![0.0; dim],
            trainable: false,
        }
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Linear")?;
        let w = rec.take("weights", rec.input_dim * rec.output_dim)?;
        let b = rec.take("bias", rec.output_dim)?;
        Ok(Self {
            weights: Matrix::from_vec(rec.output_dim, rec.input_dim, w)?,
            bias: b,
            trainable: rec.trainable,
        })
    }
}

impl FunctionNode for Linear {
    fn kind(&self) -> &str {
        "Linear"
    }

    fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn is_trainable(&self) -> bool {
        self.trainable
    }

    fn set_trainable(&mut self, trainable: bool) {
        self.trainable = trainable;
    }

    fn raw_layout(&self) -> &'static [&'static str] {
        LAYOUT
    }

    fn raw_params(&self) -> Vec<f64> {
        let mut v = self.weights.as_slice().to_vec();
        v.extend_from_slice(&self.bias);
        v
    }

    fn raw_param_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        check_len("Linear", values, self.raw_param_count())?;
        let nw = self.weights.as_slice().len();
        self.weights.as_mut_slice().copy_from_slice(&values[..nw]);
        self.bias.copy_from_slice(&values[nw..]);
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("weights".into(), self.weights.as_slice().to_vec());
        m.insert("bias".into(), self.bias.clone());
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul_transposed(&self.weights).expect("validated");
        for r in 0..y.rows() {
            for (v, b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        y
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let gx = upstream.matmul(&self.weights).expect("validated");
        let gw = upstream.transposed_matmul(x).expect("validated");
        let mut gp = gw.into_vec();
        gp.extend(upstream.col_sums());
        (gx, gp)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
