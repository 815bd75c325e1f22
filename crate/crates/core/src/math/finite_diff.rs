use crate::error::{CfnError, Result};

pub const DEFAULT_STEP: f64 = 1e-6;

/// Central-difference gradient of a scalar function.
///
/// Each coordinate is `(f(theta + h e_i) - f(theta - h e_i)) / 2h`. This is the reference
/// every analytic backward pass in the crate is checked against.
pub fn fd_gradient<F>(mut f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(CfnError::arg(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(CfnError::Oracle(format!(
                "non-finite function value at coordinate {i} (f+ = {plus}, f- = {minus})"
            )));
        }
        let g = (plus - minus) / (2.0 * h);
        if !g.is_finite() {
            return Err(CfnError::Oracle(format!("difference quotient overflowed at coordinate {i}")));
        }
        grad.push(g);
    }
    Ok(grad)
}

/// Largest violation of `|a - b| <= max(rel * max(|a|, |b|), abs)`, as a ratio to the allowance.
/// Values `<= 1` mean every coordinate passes.
pub fn gradient_mismatch(analytic: &[f64], numeric: &[f64], rel: f64, abs: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let allowance = (rel * a.abs().max(n.abs())).max(abs);
            (a - n).abs() / allowance
        })
        .fold(0.0, f64::max)
}
