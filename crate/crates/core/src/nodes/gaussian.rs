use super::{check_len, check_record, check_scalar_output, FunctionNode, NodeRecord, ParamMap};
use crate::error::{CfnError, Result};
use crate::math::{Matrix, Rng};

/// Radial bump `f(x) = exp(-|x - c|^2 / (2 w^2))` with `w = exp(log_width)`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    center: Vec<f64>,
    log_width: f64,
    trainable: bool,
}

const LAYOUT: &[&str] = &["center", "log_width"];

impl Gaussian {
    pub fn new(center: Vec<f64>, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(CfnError::arg(format!("Gaussian width must be positive, got {width}")));
        }
        Ok(Self {
            center,
            log_width: width.ln(),
            trainable: true,
        })
    }

    /// Center ~ N(0, 1) per coordinate, width 1.
    pub fn init(input_dim: usize, rng: &mut Rng) -> Self {
        Self {
            center: (0..input_dim).map(|_| rng.standard_normal()).collect(),
            log_width: 0.0,
            trainable: true,
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn width(&self) -> f64 {
        self.log_width.exp()
    }

    pub fn from_record(rec: &NodeRecord) -> Result<Self> {
        check_record(rec, "Gaussian")?;
        check_scalar_output(rec)?;
        let center = rec.take("center", rec.input_dim)?;
        let log_width = match rec.params.get("log_width") {
            Some(_) => rec.take_scalar("log_width")?,
            None => {
                let w = rec.take_scalar("width")?;
                if w <= 0.0 {
                    return Err(CfnError::Format(format!("Gaussian width {w} is not positive")));
                }
                w.ln()
            }
        };
        Ok(Self {
            center,
            log_width,
            trainable: rec.trainable,
        })
    }
}

impl FunctionNode for Gaussian {
    fn kind(&self) -> &str {
        "Gaussian"
    }

    fn input_dim(&self) -> usize {
        self.center.len()
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
        let mut v = self.center.clone();
        v.push(self.log_width);
        v
    }

    fn set_raw_params(&mut self, values: &[f64]) -> Result<()> {
        check_len("Gaussian", values, self.center.len() + 1)?;
        let (c, rest) = values.split_at(self.center.len());
        self.center.copy_from_slice(c);
        self.log_width = rest[0];
        Ok(())
    }

    fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("center".into(), self.center.clone());
        m.insert("width".into(), vec![self.width()]);
        m.insert("log_width".into(), vec![self.log_width]);
        m
    }

    fn forward_unchecked(&self, x: &Matrix) -> Matrix {
        let inv = 1.0 / (2.0 * self.width().powi(2));
        let data = (0..x.rows())
            .map(|r| {
                let q: f64 = x
                    .row(r)
                    .iter()
                    .zip(&self.center)
                    .map(|(a, c)| (a - c).powi(2))
                    .sum();
                (-q * inv).exp()
            })
            .collect();
        Matrix::from_vec(x.rows(), 1, data).expect("sized")
    }

    fn backward_unchecked(&self, x: &Matrix, upstream: &Matrix) -> (Matrix, Vec<f64>) {
        // f = exp(-q e^{-2 rho} / 2):  df/dx = -f (x - c) / w^2,  df/drho = f q / w^2
        let inv_w2 = (-2.0 * self.log_width).exp();
        let d = self.center.len();
        let mut gx = Matrix::zeros(x.rows(), d);
        let mut gc = vec![0.0; d];
        let mut grho = 0.0;
        for r in 0..x.rows() {
            let xr = x.row(r);
            let q: f64 = xr.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum();
            let f = (-0.5 * q * inv_w2).exp();
            let g = upstream.get(r, 0) * f;
            for ((o, gci), (&a, &c)) in gx.row_mut(r).iter_mut().zip(gc.iter_mut()).zip(xr.iter().zip(&self.center)) {
                let t = g * (a - c) * inv_w2;
                *o = -t;
                *gci += t;
            }
            grho += g * q * inv_w2;
        }
        gc.push(grho);
        (gx, gc)
    }

    fn clone_box(&self) -> Box<dyn FunctionNode> {
        Box::new(self.clone())
    }
}
