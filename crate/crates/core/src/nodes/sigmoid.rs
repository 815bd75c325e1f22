use super::{
    check_len, check_record, check_scalar_output, logistic, project, project_backward,
    FunctionNode, NodeRecord, ParamMap,
};
use crate::error::{CfnError, Result};
use crate::math::{Matrix, Rng};

/// Logistic transition along a direction: `1 / (1 + exp(-s (x . d + o)))`.
#[derive(Debug, Clone)]
pub struct Sigmoid {
    direction: Vec<f64>,
    offset: f64,
    steepness: f64,
    trainable: bool,
}

/// Smooth step gate: the same logistic form with sharpness `s = exp(log_sharpness) > 0`.
#[derive(Debug, Clone)]
pub struct Step {
    direction: Vec<f64>,
    offset: f64,
    log_sharpness: f64,
    trainable: bool,
}

fn gate_forward(x: &Matrix, direction: &[f64], offset: f64, s: f64) -> Matrix {
    let data = project(x, direction)
        .into_iter()
        .map(|p| logistic(s * (p + offset)))
        .collect();
    Matrix::from_vec(x.rows(), 1, data).expect("sized")
}

/// Returns `dL/dx` and `[dL/dd.., dL/do, dL/draw]`, where `ds_draw` is the derivative of the
/// scale `s` with respect to its stored parameter.
fn gate_backward(
    x: &Matrix,
    upstream: &Matrix,
    direction: &[f64],
    offset: f64,
    s: f64,
    ds_draw: f64,
) -> (Matrix, Vec<f64>) {
    let proj = project(x, direction);
    let mut dp = Vec::with_capacity(proj.len());
    let mut g_offset = 0.0;
    let mut g_scale = 0.0;
    for (r, &p) in proj.iter().enumerate() {
        let z = p + offset;
        let f = logistic(s * z);
        let dz = upstream.get(r, 0) * f * (1.0 - f);
        dp.push(dz * s);
        g_offset += dz * s;
        g_scale += dz * z * ds_draw;
    }
    let (gx, mut gp) = project_backward(x, direction, &dp);
    gp.push(g_offset);
    gp.push(g_scale);
    (gx, gp)
}

const SIGMOID_LAYOUT: &[&str] = &["direction", "offset", "steepness"];
const STEP_LAYOUT: &[&str] = &["direction", "offset", "log_sharpness"];

impl Sigmoid {
    pub fn new(direction: Vec<f64>, offset: f64, steepness: f64) -> Self {
        Self {
            direction,
            offset,
            steepness,
            trainable: true,
        }
    }

    /// Random unit direction, offset 0, steepness 1.
    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        Self::new(rng.unit_vector(input_dim), 0.0, 1.0)
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Sigmoid")?;
        check_scalar_output(rec)?;
        Ok(Self {
            direction: rec.take("direction", rec.input_dim)?,
            offset: rec.take_scalar("offset")?,
            steepness: rec.take_scalar("steepness")?,
            trainable: rec.trainable,
        })
    }
}

impl FunctionNode for Sigmoid {
    fn kind(&self) -> &str {
        "Sigmoid"
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
        SIGMOID_LAYOUT
    }

    fn raw_params(&self) -> Vec<f64> {
        let mut v = self.direction.clone();
        v.push(self.offset);
        v.push(self.steepness);
        v
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        let d = self.direction.len();
        check_len("Sigmoid", values, d + 2)?;
        self.direction.copy_from_slice(&values[..d]);
        self.offset = values[d];
        self.steepness = values[d + 1];
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("direction".into(), self.direction.clone());
        m.insert("offset".into(), vec![self.offset]);
        m.insert("steepness".into(), vec![self.steepness]);
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        gate_forward(x, &self.direction, self.offset, self.steepness)
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        gate_backward(x, upstream, &self.direction, self.offset, self.steepness, 1.0)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}

impl Step {
    pub fn new(direction: Vec<f64>, offset: f64, sharpness: f64) -> Result<Self> {
        if !(sharpness > 0.0 && sharpness.is_finite()) {
            return Err(CfnError::arg(format!("Step sharpness must be positive, got {sharpness}")));
        }
        Ok(Self {
            direction,
            offset,
            log_sharpness: sharpness.ln(),
            trainable: true,
        })
    }

    /// Random unit direction, offset 0, sharpness 1.
    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        Self {
            direction: rng.unit_vector(input_dim),
            offset: 0.0,
            log_sharpness: 0.0,
            trainable: true,
        }
    }

    pub fn sharpness(&self) -> f64 {
        self.log_sharpness.exp()
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Step")?;
        check_scalar_output(rec)?;
        let log_sharpness = match rec.params.get("log_sharpness") {
            Some(_) => rec.take_scalar("log_sharpness")?,
            None => {
                let s = rec.take_scalar("sharpness")?;
                if s <= 0.0 {
                    return Err(CfnError::Format(format!("Step sharpness {s} is not positive")));
                }
                s.ln()
            }
        };
        Ok(Self {
            direction: rec.take("direction", rec.input_dim)?,
            offset: rec.take_scalar("offset")?,
            log_sharpness,
            trainable: rec.trainable,
        })
    }
}

impl FunctionNode for Step {
    fn kind(&self) -> &str {
        "Step"
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
        STEP_LAYOUT
    }

    fn raw_params(&self) -> Vec<f64> {
        let mut v = self.direction.clone();
        v.push(self.offset);
        v.push(self.log_sharpness);
        v
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        let d = self.direction.len();
        check_len("Step", values, d + 2)?;
        self.direction.copy_from_slice(&values[..d]);
        self.offset = values[d];
        self.log_sharpness = values[d + 1];
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("direction".into(), self.direction.clone());
        m.insert("offset".into(), vec![self.offset]);
        m.insert("sharpness".into(), vec![self.sharpness()]);
        m.insert("log_sharpness".into(), vec![self.log_sharpness]);
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        gate_forward(x, &self.direction, self.offset, self.sharpness())
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let s = self.sharpness();
        // ds/d(log_sharpness) = s
        gate_backward(x, upstream, &self.direction, self.offset, s, s)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
