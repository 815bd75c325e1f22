//! Dense matrices, seeded randomness and the finite-difference gradient oracle.

mod finite_diff;
mod matrix;
mod rng;

pub use finite_diff::{fd_gradient, gradient_mismatch, DEFAULT_STEP};
pub use matrix::{dot, l2_norm, Matrix};
pub use rng::{Dist, Rng};
