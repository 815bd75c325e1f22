use super::{
    check_len, check_record, check_scalar_output, project, project_backward, FunctionNode,
    NodeRecord, ParamMap,
};
use crate::error::Result;
use crate::math::{Matrix, Rng};
use std::f64::consts::PI;

/// `f(x) = A sin(omega (x . d) + phi)`.
#[derive(Debug, Clone)]
pub struct Sinusoidal {
    amplitude: f64,
    frequency: f64,
    phase: f64,
    direction: Vec<f64>,
    trainable: bool,
}

const LAYOUT: &[&str] = &["amplitude", "frequency", "phase", "direction"];

impl Sinusoidal {
    pub fn new(amplitude: f64, frequency: f64, phase: f64, direction: Vec<f64>) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
            direction,
            trainable: true,
        }
    }

    /// A = 1, omega ~ U(0.5, 2), phi ~ U(-pi, pi), random unit direction.
    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        let frequency = rng.uniform(0.5, 2.0);
        let phase = rng.uniform(-PI, PI);
        Self::new(1.0, frequency, phase, rng.unit_vector(input_dim))
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// `(A, ω, φ)` of the equivalent one-dimensional curve `A sin(ω t + φ)` with
    /// `A ≥ 0`, `ω ≥ 0` and `φ ∈ (−π, π]`. `None` unless the input is one-dimensional.
    pub fn canonical_1d(&self) -> Option<(f64, f64, f64)> {
        match self.direction[..] {
            [d] => Some(canonical_sinusoid(self.amplitude, self.frequency * d, self.phase)),
            _ => None,
        }
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Sinusoidal")?;
        check_scalar_output(rec)?;
        Ok(Self {
            amplitude: rec.take_scalar("amplitude")?,
            frequency: rec.take_scalar("frequency")?,
            phase: rec.take_scalar("phase")?,
            direction: rec.take("direction", rec.input_dim)?,
            trainable: rec.trainable,
        })
    }
}

/// Rewrites `A sin(ω t + φ)` so that `A ≥ 0`, `ω ≥ 0` and `φ ∈ (−π, π]`, using
/// `sin(−u) = −sin(u)` and `sin(u + π) = −sin(u)`. The curve is unchanged.
pub fn canonical_sinusoid(amplitude: f64, omega: f64, phase: f64) -> (f64, f64, f64) {
    let (mut a, mut w, mut p) = (amplitude, omega, phase);
    if w < 0.0 {
        w = -w;
        p = -p;
        a = -a;
    }
    if a < 0.0 {
        a = -a;
        p += PI;
    }
    p = (p + PI).rem_euclid(2.0 * PI) - PI;
    if p <= -PI {
        p += 2.0 * PI;
    }
    (a, w, p)
}

impl FunctionNode for Sinusoidal {
    fn kind(&self) -> &str {
        "Sinusoidal"
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
        let mut v = vec![self.amplitude, self.frequency, self.phase];
        v.extend_from_slice(&self.direction);
        v
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        check_len("Sinusoidal", values, 3 + self.direction.len())?;
        self.amplitude = values[0];
        self.frequency = values[1];
        self.phase = values[2];
        self.direction.copy_from_slice(&values[3..]);
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("amplitude".into(), vec![self.amplitude]);
        m.insert("frequency".into(), vec![self.frequency]);
        m.insert("phase".into(), vec![self.phase]);
        m.insert("direction".into(), self.direction.clone());
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let data = project(x, &self.direction)
            .into_iter()
            .map(|p| self.amplitude * (self.frequency * p + self.phase).sin())
            .collect();
        Matrix::from_vec(x.rows(), 1, data).expect("sized")
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        let (mut ga, mut gw, mut gphi) = (0.0, 0.0, 0.0);
        let dp: Vec<f64> = project(x, &self.direction)
            .into_iter()
            .enumerate()
            .map(|(r, p)| {
                let u = upstream.get(r, 0);
                let arg = self.frequency * p + self.phase;
                let (s, c) = arg.sin_cos();
                ga += u * s;
                gw += u * self.amplitude * c * p;
                gphi += u * self.amplitude * c;
                u * self.amplitude * c * self.frequency
            })
            .collect();
        let (gx, gd) = project_backward(x, &self.direction, &dp);
        let mut gp = vec![ga, gw, gphi];
        gp.extend(gd);
        (gx, gp)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
