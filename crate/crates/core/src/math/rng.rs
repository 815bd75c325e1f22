use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::error::{CfnError, Result};

/// Seeded, portable random source.
///
/// Backed by ChaCha8 (`rand_chacha`), whose output stream is fixed by the seed on every
/// platform. [`Rng::split`] derives an independent child stream, so sub-tasks (parameter
/// init, shuffling, data generation) can be seeded from one master seed without sharing state.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

/// Distributions understood by [`Rng::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    /// Normal(0, sqrt(2 / fan_in)).
    He { fan_in: usize },
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child generator seeded from this stream; advances `self` by one draw.
    pub fn split(&mut self) -> Rng {
        Rng::new(self.inner.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[lo, hi)`; `lo` when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.inner.random();
        lo + (hi - lo) * u
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    pub fn sample(&mut self, dist: Dist) -> Result<f64> {
        match dist {
            Dist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                    return Err(CfnError::arg(format!("uniform({lo}, {hi}) needs finite lo <= hi")));
                }
                Ok(self.uniform(lo, hi))
            }
            Dist::Normal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite()) || sd < 0.0 {
                    return Err(CfnError::arg(format!("normal({mean}, {sd}) needs finite mean and sd >= 0")));
                }
                Ok(self.normal(mean, sd))
            }
            Dist::He { fan_in } => {
                if fan_in == 0 {
                    return Err(CfnError::arg("he(fan_in) needs fan_in >= 1"));
                }
                Ok(self.normal(0.0, (2.0 / fan_in as f64).sqrt()))
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Random direction on the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.standard_normal()).collect();
            let norm = super::l2_norm(&v);
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| self.standard_normal()).collect();
        Matrix::from_vec(rows, cols, data).expect("length matches by construction")
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        let data = (0..rows * cols).map(|_| self.uniform(lo, hi)).collect();
        Matrix::from_vec(rows, cols, data).expect("length matches by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_distributions() {
        let mut rng = Rng::new(1);
        assert_eq!(rng.sample(Dist::Uniform { lo: 0.0, hi: 0.0 }).unwrap(), 0.0);
        assert_eq!(rng.sample(Dist::Normal { mean: 5.0, sd: 0.0 }).unwrap(), 5.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = Rng::new(1);
        assert!(matches!(
            rng.sample(Dist::Normal { mean: 0.0, sd: -1.0 }),
            Err(CfnError::Argument(_))
        ));
        assert!(rng.sample(Dist::Uniform { lo: 1.0, hi: 0.0 }).is_err());
        assert!(rng.sample(Dist::He { fan_in: 0 }).is_err());
    }

    #[test]
    fn he_spread_matches_fan_in() {
        let mut rng = Rng::new(2024);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| rng.sample(Dist::He { fan_in: 8 }).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = (2.0f64 / 8.0).sqrt();
        assert!((var.sqrt() - target).abs() < 0.05 * target, "sd {}", var.sqrt());
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = Rng::new(99);
        let mut b = Rng::new(99);
        for _ in 0..1000 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn split_streams_differ_from_parent() {
        let mut parent = Rng::new(5);
        let mut child = parent.split();
        let p: Vec<u64> = (0..4).map(|_| parent.next_u64()).collect();
        let c: Vec<u64> = (0..4).map(|_| child.next_u64()).collect();
        assert_ne!(p, c);
    }

    #[test]
    fn unit_vectors_have_unit_norm() {
        let mut rng = Rng::new(11);
        for dim in 1..6 {
            let v = rng.unit_vector(dim);
            assert!((crate::math::l2_norm(&v) - 1.0).abs() < 1e-12);
        }
    }
}
