use super::{
    check_len, check_record, check_scalar_output, project, project_backward, FunctionNode,
    NodeRecord, ParamMap,
};
use crate::error::{CfnError, Result};
use crate::math::{Matrix, Rng};

/// `f(x) = sum_i a_i (x . d)^i`, evaluated with Horner's rule.
#[derive(Debug, Clone)]
pub struct Polynomial {
    direction: Vec<f64>,
    /// `a_0 .. a_D`.
    coefficients: Vec<f64>,
    trainable: bool,
}

const LAYOUT: &[&str] = &["direction", "coefficients"];

fn horner(coefficients: &[f64], p: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &a| acc * p + a)
}

/// Derivative of the polynomial at `p`.
fn horner_derivative(coefficients: &[f64], p: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &a)| acc * p + i as f64 * a)
}

impl Polynomial {
    pub fn new(direction: Vec<f64>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(CfnError::arg("Polynomial needs degree >= 1 (at least two coefficients)"));
        }
        Ok(Self {
            direction,
            coefficients,
            trainable: true,
        })
    }

    /// Random unit direction, coefficients ~ U(-0.1, 0.1).
    pub fn init(input_dim: usize, degree: usize, rng: &mut Rng) -> Self {
        Self {
            direction: rng.unit_vector(input_dim),
            coefficients: (0..=degree).map(|_| rng.uniform(-0.1, 0.1)).collect(),
            trainable: true,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Polynomial")?;
        check_scalar_output(rec)?;
        let coefficients = rec
            .params
            .get("coefficients")
            .cloned()
            .ok_or_else(|| CfnError::Format("Polynomial node is missing `coefficients`".into()))?;
        if coefficients.len() < 2 {
            return Err(CfnError::shape("Polynomial coefficients must have length >= 2"));
        }
        Ok(Self {
            direction: rec.take("direction", rec.input_dim)?,
            coefficients,
            trainable: rec.trainable,
        })
    }
}

impl FunctionNode for Polynomial {
    fn kind(&self) -> &str {
        "Polynomial"
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
        v.extend_from_slice(&self.coefficients);
        v
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        let d = self.direction.len();
        check_len("Polynomial", values, d + self.coefficients.len())?;
        self.direction.copy_from_slice(&values[..d]);
        self.coefficients.copy_from_slice(&values[d..]);
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("direction".into(), self.direction.clone());
        m.insert("coefficients".into(), self.coefficients.clone());
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let data = project(x, &self.direction)
            .into_iter()
            .map(|p| horner(&self.coefficients, p))
            .collect();
        Matrix::from_vec(x.rows(), 1, data).expect("sized")
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let proj = project(x, &self.direction);
        let mut ga = vec![0.0; self.coefficients.len()];
        let dp: Vec<f64> = proj
            .iter()
            .enumerate()
            .map(|(r, &p)| {
                let u = upstream.get(r, 0);
                let mut pow = 1.0;
                for g in ga.iter_mut() {
                    *g += u * pow;
                    pow *= p;
                }
                u * horner_derivative(&self.coefficients, p)
            })
            .collect();
        let (gx, mut gp) = project_backward(x, &self.direction, &dp);
        gp.extend(ga);
        (gx, gp)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
