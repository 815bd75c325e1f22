//! Training losses with analytic gradients. All values are means over the batch.

use serde::{Deserialize, Serialize};

use crate::error::{CfnError, Result};
use crate::math::Matrix;

/// Probability clamp applied before the logarithm in binary cross-entropy.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean of squared errors over every entry.
    Mse,
    /// Binary cross-entropy on probabilities in (0, 1), targets in {0, 1}.
    Bce,
    /// Softmax cross-entropy on raw logits against one-hot targets.
    SoftmaxCe,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Bce => "bce",
            LossKind::SoftmaxCe => "softmax_ce",
        }
    }
}

/// Loss value and `d loss / d pred`.
pub fn loss(kind: LossKind, pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(CfnError::shape(format!(
            "{} loss: prediction is {}x{}, target is {}x{}",
            kind.name(),
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    if pred.rows() == 0 {
        return Err(CfnError::arg("loss on an empty batch"));
    }
    match kind {
        LossKind::Mse => Ok(mse(pred, target)),
        LossKind::Bce => bce(pred, target),
        LossKind::SoftmaxCe => softmax_ce(pred, target),
    }
}

fn mse(pred: &Matrix, target: &Matrix) -> (f64, Matrix) {
    let n = pred.as_slice().len() as f64;
    let diff = pred.sub(target).expect("shapes checked");
    let value = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n;
    (value, diff.scale(2.0 / n))
}

fn bce(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if target.cols() != 1 {
        return Err(CfnError::shape(format!(
            "bce expects a single probability column, got {}",
            target.cols()
        )));
    }
    if let Some(bad) = target.as_slice().iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(CfnError::arg(format!("bce target {bad} is not 0 or 1")));
    }
    let n = pred.rows() as f64;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), 1);
    for (i, (&p, &y)) in pred.as_slice().iter().zip(target.as_slice()).enumerate() {
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        value -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad.as_mut_slice()[i] = (p - y) / (p * (1.0 - p)) / n;
    }
    Ok((value / n, grad))
}

/// Row-wise softmax with the max subtracted for stability.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

fn softmax_ce(logits: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    for r in 0..target.rows() {
        let row = target.row(r);
        let total: f64 = row.iter().sum();
        if row.iter().any(|&y| !(0.0..=1.0).contains(&y)) || (total - 1.0).abs() > 1e-9 {
            return Err(CfnError::arg(format!(
                "softmax cross-entropy target row {r} is not a probability vector"
            )));
        }
    }
    let n = logits.rows() as f64;
    let mut value = 0.0;
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        value -= row
            .iter()
            .zip(target.row(r))
            .map(|(l, y)| y * (l - log_z))
            .sum::<f64>();
    }
    let grad = softmax(logits).sub(target)?.scale(1.0 / n);
    Ok((value / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{fd_gradient, gradient_mismatch, Rng};

    #[test]
    fn mse_of_exact_prediction_is_zero() {
        let y = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let (v, g) = loss(LossKind::Mse, &y, &y).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, Matrix::zeros(2, 2));
    }

    #[test]
    fn bce_at_half_is_ln2() {
        for y in [0.0, 1.0] {
            let (v, _) = loss(
                LossKind::Bce,
                &Matrix::column(&[0.5, 0.5]),
                &Matrix::column(&[y, y]),
            )
            .unwrap();
            assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_logits_give_ln_k() {
        let logits = Matrix::filled(4, 3, 0.7);
        let target = Matrix::from_rows(&[
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
        ])
        .unwrap();
        let (v, _) = loss(LossKind::SoftmaxCe, &logits, &target).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bce_clamps_extreme_probabilities() {
        let (v, g) = loss(LossKind::Bce, &Matrix::column(&[0.0]), &Matrix::column(&[1.0])).unwrap();
        assert!(v.is_finite() && g.is_finite());
        assert!((v + BCE_CLAMP.ln()).abs() < 1e-9);
    }

    #[test]
    fn domain_and_shape_errors() {
        let p = Matrix::column(&[0.3, 0.6]);
        assert!(matches!(
            loss(LossKind::Bce, &p, &Matrix::column(&[0.5, 1.0])),
            Err(CfnError::Argument(_))
        ));
        assert!(matches!(
            loss(LossKind::Mse, &p, &Matrix::column(&[0.5])),
            Err(CfnError::Shape(_))
        ));
        let logits = Matrix::zeros(1, 2);
        assert!(loss(LossKind::SoftmaxCe, &logits, &Matrix::from_rows(&[[1.0, 1.0]]).unwrap()).is_err());
    }

    fn check_grad(kind: LossKind, pred: &Matrix, target: &Matrix) {
        let (_, g) = loss(kind, pred, target).unwrap();
        let numeric = fd_gradient(
            |v| {
                let p = Matrix::from_vec(pred.rows(), pred.cols(), v.to_vec()).unwrap();
                loss(kind, &p, target).unwrap().0
            },
            pred.as_slice(),
            1e-6,
        )
        .unwrap();
        let worst = gradient_mismatch(g.as_slice(), &numeric, 1e-6, 1e-8);
        assert!(worst <= 1.0, "{kind:?}: {worst}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(31);
        for _ in 0..20 {
            let pred = rng.normal_matrix(5, 2);
            let target = rng.normal_matrix(5, 2);
            check_grad(LossKind::Mse, &pred, &target);

            let probs = rng.uniform_matrix(6, 1, 0.05, 0.95);
            let labels: Vec<f64> = (0..6).map(|_| f64::from(rng.uniform(0.0, 1.0) < 0.5)).collect();
            check_grad(LossKind::Bce, &probs, &Matrix::column(&labels));

            let logits = rng.normal_matrix(6, 4);
            let mut onehot = Matrix::zeros(6, 4);
            for r in 0..6 {
                onehot.set(r, (rng.next_u64() % 4) as usize, 1.0);
            }
            check_grad(LossKind::SoftmaxCe, &logits, &onehot);
        }
    }

    #[test]
    fn losses_are_non_negative() {
        let mut rng = Rng::new(32);
        for _ in 0..50 {
            let p = rng.uniform_matrix(4, 1, 0.0, 1.0);
            let y = Matrix::column(&[0.0, 1.0, 1.0, 0.0]);
            assert!(loss(LossKind::Bce, &p, &y).unwrap().0 >= 0.0);
            let logits = rng.normal_matrix(4, 3).scale(5.0);
            let t = Matrix::from_rows(&[[0.0, 1.0, 0.0]; 4]).unwrap();
            assert!(loss(LossKind::SoftmaxCe, &logits, &t).unwrap().0 >= 0.0);
            let a = rng.normal_matrix(4, 2);
            let b = rng.normal_matrix(4, 2);
            assert!(loss(LossKind::Mse, &a, &b).unwrap().0 >= 0.0);
        }
    }
}
