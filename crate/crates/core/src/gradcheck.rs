//! Whole-network gradient verification against central finite differences.
//!
//! The numeric side only ever calls [`Network::forward`] and the loss value, so it shares no
//! code with the backward pass it checks.

use crate::composition::Network;
use crate::error::Result;
use crate::loss::{loss, LossKind};
use crate::math::{fd_gradient, gradient_mismatch, Matrix};

#[derive(Debug, Clone)]
pub struct GradCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// Worst `|a - n| / max(rel * max(|a|, |n|), abs)`; `<= 1` passes.
    pub worst_ratio: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

/// Analytic loss gradient with respect to every trainable parameter of `net`.
pub fn analytic_gradient(net: &Network, x: &Matrix, target: &Matrix, kind: LossKind) -> Result<Vec<f64>> {
    let (pred, cache) = net.forward_cached(x)?;
    let (_, dpred) = loss(kind, &pred, target)?;
    Ok(net.backward(&cache, &dpred)?.params)
}

pub fn check_network(
    net: &Network,
    x: &Matrix,
    target: &Matrix,
    kind: LossKind,
    h: f64,
    rel: f64,
    abs: f64,
) -> Result<GradCheck> {
    let analytic = analytic_gradient(net, x, target, kind)?;
    let mut probe = net.clone();
    let numeric = fd_gradient(
        |theta| {
            probe.set_params(theta).expect("length preserved");
            match probe.forward(x).and_then(|p| loss(kind, &p, target)) {
                Ok((v, _)) => v,
                Err(_) => f64::NAN,
            }
        },
        &net.param_vector(),
        h,
    )?;
    let worst_ratio = gradient_mismatch(&analytic, &numeric, rel, abs);
    Ok(GradCheck {
        analytic,
        numeric,
        worst_ratio,
    })
}
