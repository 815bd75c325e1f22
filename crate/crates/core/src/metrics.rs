//! Evaluation metrics: accuracy, ROC-AUC (midrank Mann-Whitney form) and RMSE.

use serde::{Deserialize, Serialize};

use crate::error::{CfnError, Result};
use crate::math::Matrix;

/// Kind of supervised problem a dataset poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Binary,
    Multiclass,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = CfnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "binary" => Ok(Task::Binary),
            "multiclass" => Ok(Task::Multiclass),
            other => Err(CfnError::arg(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucScheme {
    Binary,
    OneVsRestMacro,
}

/// Binary probabilities at or above this are classified positive.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Predicted class per row: thresholded probability (binary) or argmax (multiclass).
pub fn predicted_labels(pred: &Matrix, task: Task) -> Result<Vec<usize>> {
    match task {
        Task::Binary => {
            if pred.cols() != 1 {
                return Err(CfnError::shape("binary predictions must be a single column"));
            }
            Ok(pred
                .as_slice()
                .iter()
                .map(|&p| usize::from(p >= DECISION_THRESHOLD))
                .collect())
        }
        Task::Multiclass => Ok(pred.argmax_rows()),
        Task::Regression => Err(CfnError::arg("class labels are undefined for regression")),
    }
}

/// Fraction of rows whose predicted class matches the target.
///
/// Binary targets are a 0/1 column; multiclass targets are one-hot rows.
pub fn accuracy(pred: &Matrix, target: &Matrix, task: Task) -> Result<f64> {
    if pred.rows() == 0 {
        return Err(CfnError::arg("accuracy of an empty prediction set"));
    }
    if pred.shape() != target.shape() {
        return Err(CfnError::shape(format!(
            "accuracy: predictions {}x{} vs targets {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let predicted = predicted_labels(pred, task)?;
    let truth = predicted_labels(target, task)?;
    let correct = predicted.iter().zip(&truth).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / pred.rows() as f64)
}

/// Midranks (1-based) of `values`; tied entries share the mean of their ranks.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CfnError::MetricUndefined(
            "ROC-AUC needs both positive and negative examples".into(),
        ));
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(r, _)| r)
        .sum();
    let n_pos_f = n_pos as f64;
    Ok((rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

fn binary_labels(column: &[f64]) -> Result<Vec<bool>> {
    column
        .iter()
        .map(|&y| match y {
            y if y == 1.0 => Ok(true),
            y if y == 0.0 => Ok(false),
            other => Err(CfnError::arg(format!("AUC label {other} is not 0 or 1"))),
        })
        .collect()
}

/// Area under the ROC curve.
///
/// `Binary`: `scores` and `labels` are single columns. `OneVsRestMacro`: `scores` holds one
/// column per class (probabilities), `labels` is one-hot, and per-class AUCs are averaged.
pub fn roc_auc(scores: &Matrix, labels: &Matrix, scheme: AucScheme) -> Result<f64> {
    if scores.shape() != labels.shape() {
        return Err(CfnError::shape(format!(
            "roc_auc: scores {}x{} vs labels {}x{}",
            scores.rows(),
            scores.cols(),
            labels.rows(),
            labels.cols()
        )));
    }
    match scheme {
        AucScheme::Binary => {
            if scores.cols() != 1 {
                return Err(CfnError::shape("binary AUC expects one score column"));
            }
            binary_auc(scores.as_slice(), &binary_labels(labels.as_slice())?)
        }
        AucScheme::OneVsRestMacro => {
            let k = scores.cols();
            let mut total = 0.0;
            for c in 0..k {
                let positive = binary_labels(&labels.col_values(c))?;
                total += binary_auc(&scores.col_values(c), &positive)
                    .map_err(|e| CfnError::MetricUndefined(format!("class {c}: {e}")))?;
            }
            Ok(total / k as f64)
        }
    }
}

pub fn rmse(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(CfnError::shape(format!(
            "rmse: predictions {}x{} vs targets {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let n = pred.as_slice().len();
    if n == 0 {
        return Err(CfnError::arg("rmse of an empty prediction set"));
    }
    let sse: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, y)| (p - y).powi(2))
        .sum();
    Ok((sse / n as f64).sqrt())
}

/// One-hot encoding of class indices in `0..k`.
pub fn one_hot(labels: &[usize], k: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), k);
    for (r, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(CfnError::arg(format!("label {label} out of range for {k} classes")));
        }
        m.set(r, label, 1.0);
    }
    Ok(m)
}
