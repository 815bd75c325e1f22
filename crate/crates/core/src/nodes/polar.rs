//! Parameter-free polar features of the input plane.

use super::{check_len, check_record, check_scalar_output, FunctionNode, NodeRecord, ParamMap};
use crate::error::{CfnError, Result};
use crate::math::Matrix;

/// Euclidean norm of the input row.
#[derive(Debug, Clone)]
pub struct Radius {
    input_dim: usize,
    trainable: bool,
}

/// Polar angle `atan2(x1, x0)` of the first two input columns, in `(-pi, pi]`.
#[derive(Debug, Clone)]
pub struct Angle {
    input_dim: usize,
    trainable: bool,
}

impl Radius {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            trainable: true,
        }
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Radius")?;
        check_scalar_output(rec)?;
        Ok(Self {
            input_dim: rec.input_dim,
            trainable: rec.trainable,
        })
    }
}

impl Angle {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            trainable: true,
        }
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Angle")?;
        check_scalar_output(rec)?;
        if rec.input_dim < 2 {
            return Err(CfnError::shape("Angle node needs at least 2 input columns"));
        }
        Ok(Self {
            input_dim: rec.input_dim,
            trainable: rec.trainable,
        })
    }
}

macro_rules! parameter_free {
    ($name:literal) => {
        fn kind(&self) -> &str {
            $name
        }

        fn input_dim(&self) -> usize {
            self.input_dim
        }

        fn output_dim(&self) -> usize {
            1
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
            check_len($name, values, 0)
        }

        fn params(&self) -> ParamMap {
            ParamMap::new()
        }

        fn clone_box(&self) -> Box<dyn FunctionNode> {
            Box::new(self.clone())
        }
    };
}

impl FunctionNode for Radius {
    parameter_free!("Radius");

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let data = (0..x.rows()).map(|r| crate::math::l2_norm(x.row(r))).collect();
        Matrix::from_vec(x.rows(), 1, data).expect("sized")
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let mut gx = Matrix::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            let norm = crate::math::l2_norm(x.row(r));
            // subgradient 0 at the origin
            if norm > 0.0 {
                let u = upstream.get(r, 0) / norm;
                for (o, &v) in gx.row_mut(r).iter_mut().zip(x.row(r)) {
                    *o = u * v;
                }
            }
        }
        (gx, Vec::new())
    }
}

impl FunctionNode for Angle {
    parameter_free!("Angle");

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let data = (0..x.rows())
            .map(|r| x.get(r, 1).atan2(x.get(r, 0)))
            .collect();
        Matrix::from_vec(x.rows(), 1, data).expect("sized")
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let mut gx = Matrix::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            let (a, b) = (x.get(r, 0), x.get(r, 1));
            let r2 = a * a + b * b;
            if r2 > 0.0 {
                let u = upstream.get(r, 0) / r2;
                gx.set(r, 0, -b * u);
                gx.set(r, 1, a * u);
            }
        }
        (gx, Vec::new())
    }
}
