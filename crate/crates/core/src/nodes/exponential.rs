use super::{
    check_len, check_record, check_scalar_output, project, project_backward, FunctionNode,
    NodeRecord, ParamMap,
};
use crate::error::{CfnError, Result};
use crate::math::{Matrix, Rng};

/// Default ceiling on the exponent.
pub const DEFAULT_EXP_CLAMP: f64 = 20.0;

/// `f(x) = exp(min(x . d + o, clamp_hi))`.
///
/// The exponent is clamped so a single large projection cannot overflow; above the ceiling
/// the node is flat and passes no gradient.
#[derive(Debug, Clone)]
pub struct Exponential {
    direction: Vec<f64>,
    offset: f64,
    clamp_hi: f64,
    trainable: bool,
}

const LAYOUT: &[&str] = &["direction", "offset"];

impl Exponential {
    pub fn new(direction: Vec<f64>, offset: f64) -> Self {
        Self {
            direction,
            offset,
            clamp_hi: DEFAULT_EXP_CLAMP,
            trainable: true,
        }
    }

    pub fn with_clamp(mut self, clamp_hi: f64) -> Result<Self> {
        if !clamp_hi.is_finite() {
            return Err(CfnError::arg("Exponential clamp must be finite"));
        }
        self.clamp_hi = clamp_hi;
        Ok(self)
    }

    /// Random unit direction scaled by 0.1, offset 0.
    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        let direction = rng.unit_vector(input_dim).into_iter().map(|v| 0.1 * v).collect();
        Self::new(direction, 0.0)
    }

    pub fn clamp_hi(&self) -> f64 {
        self.clamp_hi
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Exponential")?;
        check_scalar_output(rec)?;
        let clamp_hi = match rec.params.get("clamp_hi") {
            Some(_) => rec.take_scalar("clamp_hi")?,
            None => DEFAULT_EXP_CLAMP,
        };
        let mut node = Self::new(rec.take("direction", rec.input_dim)?, rec.take_scalar("offset")?)
            .with_clamp(clamp_hi)?;
        node.trainable = rec.trainable;
        Ok(node)
    }
}

impl FunctionNode for Exponential {
    fn kind(&self) -> &str {
        "Exponential"
    }

    fn input_dim(&self) -> usize {
        self.direction.len()
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
        LAYOUT
    }

    fn raw_params(&self) -> Vec<f64> {
        let mut v = self.direction.clone();
        v.push(self.offset);
        v
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        let d = self.direction.len();
        check_len("Exponential", values, d + 1)?;
        self.direction.copy_from_slice(&values[..d]);
        self.offset = values[d];
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("direction".into(), self.direction.clone());
        m.insert("offset".into(), vec![self.offset]);
        m.insert("clamp_hi".into(), vec![self.clamp_hi]);
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let data = project(x, &self.direction)
            .into_iter()
            .map(|p| (p + self.offset).min(self.clamp_hi).exp())
            .collect();
        Matrix::from_vec(x.rows(), 1, data).expect("sized")
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let mut g_offset = 0.0;
        let dp: Vec<f64> = project(x, &self.direction)
            .into_iter()
            .enumerate()
            .map(|(r, p)| {
                let z = p + self.offset;
                let g = if z < self.clamp_hi {
                    upstream.get(r, 0) * z.exp()
                } else {
                    0.0
                };
                g_offset += g;
                g
            })
            .collect();
        let (gx, mut gp) = project_backward(x, &self.direction, &dp);
        gp.push(g_offset);
        (gx, gp)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
