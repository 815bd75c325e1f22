//! Adam training loop with L2 penalty, gradient clipping, step decay and early stopping.

use serde::{Deserialize, Serialize};

use crate::composition::Network;
use crate::error::{CfnError, Result};
use crate::loss::{loss, LossKind};
use crate::math::{l2_norm, Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub l2_lambda: f64,
    pub epochs: usize,
    /// 0 means one full batch per epoch.
    pub batch_size: usize,
    pub patience: usize,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(1.0),
            l2_lambda: 1e-4,
            epochs: 150,
            batch_size: 0,
            patience: 20,
            lr_decay_factor: 0.1,
            lr_decay_every: 50,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CfnError::arg(format!("train config: {what}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return bad("clip_norm must be positive");
        }
        if !(self.l2_lambda >= 0.0) {
            return bad("l2_lambda must be non-negative");
        }
        if self.epochs == 0 || self.patience == 0 || self.lr_decay_every == 0 {
            return bad("epochs, patience and lr_decay_every must be at least 1");
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return bad("lr_decay_factor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Learning rate in effect during `epoch` (1-based): `η · γ^⌊(epoch − 1) / every⌋`.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    let drops = epoch.saturating_sub(1) / config.lr_decay_every;
    config.learning_rate * config.lr_decay_factor.powi(drops as i32)
}

/// Rescales `g` onto the ball of radius `max_norm` when it lies outside.
pub fn clip_gradients(g: &mut [f64], max_norm: f64) {
    let norm = l2_norm(g);
    if norm > max_norm {
        let k = max_norm / norm;
        g.iter_mut().for_each(|v| *v *= k);
    }
}

/// Adds the gradient of `(λ/2)‖θ‖²`.
pub fn apply_l2(g: &mut [f64], params: &[f64], lambda: f64) -> Result<()> {
    if g.len() != params.len() {
        return Err(CfnError::shape(format!(
            "l2: gradient has {} entries, parameters {}",
            g.len(),
            params.len()
        )));
    }
    if lambda != 0.0 {
        g.iter_mut().zip(params).for_each(|(gi, p)| *gi += lambda * p);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(
        &mut self,
        params: &mut [f64],
        g: &[f64],
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> Result<()> {
        if params.len() != self.m.len() || g.len() != self.m.len() {
            return Err(CfnError::shape(format!(
                "adam: state tracks {} parameters, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                g.len()
            )));
        }
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Patience bookkeeping. An epoch counts as an improvement only when its loss is strictly lower.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> Verdict {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            return Verdict::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            Verdict::Stop
        } else {
            Verdict::Continue
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best_params: Vec<f64>,
    pub history: Vec<EpochRecord>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
}

impl TrainResult {
    pub fn best_val_loss(&self) -> f64 {
        self.history[self.best_epoch - 1].val_loss
    }
}

/// Inputs and targets with matching row counts.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: &'a Matrix,
    pub y: &'a Matrix,
}

impl<'a> Samples<'a> {
    pub fn new(x: &'a Matrix, y: &'a Matrix) -> Self {
        Self { x, y }
    }

    fn check(&self, net: &Network, what: &str) -> Result<()> {
        if self.x.rows() != self.y.rows() {
            return Err(CfnError::shape(format!(
                "{what}: {} input rows but {} target rows",
                self.x.rows(),
                self.y.rows()
            )));
        }
        if self.x.rows() == 0 {
            return Err(CfnError::arg(format!("{what} set is empty")));
        }
        if self.x.cols() != net.input_dim() || self.y.cols() != net.output_dim() {
            return Err(CfnError::shape(format!(
                "{what}: data is {} -> {} columns, network is {} -> {}",
                self.x.cols(),
                self.y.cols(),
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(())
    }
}

/// Mean loss of `net` on `data`.
pub fn evaluate_loss(net: &Network, data: Samples<'_>, kind: LossKind) -> Result<f64> {
    let pred = net.forward(data.x)?;
    Ok(loss(kind, &pred, data.y)?.0)
}

/// Trains `net` in place and leaves it holding the best weights seen on `val`.
pub fn train(
    net: &mut Network,
    train_data: Samples<'_>,
    val: Samples<'_>,
    kind: LossKind,
    config: &TrainConfig,
) -> Result<TrainResult> {
    val.check(net, "validation")?;
    train_with(net, train_data, kind, config, |n, _| evaluate_loss(n, val, kind))
}

/// Like [`train`], with the per-epoch monitoring loss supplied by `monitor(net, epoch)`.
pub fn train_with<F>(
    net: &mut Network,
    data: Samples<'_>,
    kind: LossKind,
    config: &TrainConfig,
    mut monitor: F,
) -> Result<TrainResult>
where
    F: FnMut(&Network, usize) -> Result<f64>,
{
    config.validate()?;
    data.check(net, "training")?;
    let n = data.x.rows();
    let batch = if config.batch_size == 0 { n } else { config.batch_size.min(n) };
    let mut rng = Rng::new(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = net.param_vector();
    let mut adam = AdamState::new(params.len());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = params.clone();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let lr = lr_at(epoch, config);
        rng.shuffle(&mut order);
        let mut weighted_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (bx, by) = if chunk.len() == n {
                (data.x.clone(), data.y.clone())
            } else {
                (data.x.select_rows(chunk), data.y.select_rows(chunk))
            };
            let abort = |e: CfnError| CfnError::Training {
                epoch,
                detail: e.to_string(),
            };
            let (pred, cache) = net.forward_cached(&bx).map_err(abort)?;
            let (value, dpred) = loss(kind, &pred, &by).map_err(abort)?;
            if !value.is_finite() {
                return Err(CfnError::Training {
                    epoch,
                    detail: format!("{} loss is {value} at the output of layer {}", kind.name(), net.layers().len() - 1),
                });
            }
            let mut g = net.backward(&cache, &dpred).map_err(abort)?.params;
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(CfnError::Training {
                    epoch,
                    detail: format!("non-finite gradient in {}", locate_param(net, i)),
                });
            }
            apply_l2(&mut g, &params, config.l2_lambda)?;
            if let Some(c) = config.clip_norm {
                clip_gradients(&mut g, c);
            }
            adam.step(&mut params, &g, lr, config.beta1, config.beta2, config.eps)?;
            net.set_params(&params)?;
            weighted_loss += value * chunk.len() as f64;
        }

        let train_loss = weighted_loss / n as f64;
        let val_loss = monitor(net, epoch).map_err(|e| CfnError::Training {
            epoch,
            detail: format!("validation: {e}"),
        })?;
        if !val_loss.is_finite() {
            return Err(CfnError::Training {
                epoch,
                detail: format!("validation loss is {val_loss}"),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
        log::debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e} lr {lr:e}");
        match stopper.observe(epoch, val_loss) {
            Verdict::Improved => best_params.clone_from(&params),
            Verdict::Continue => {}
            Verdict::Stop => break,
        }
    }

    net.set_params(&best_params)?;
    Ok(TrainResult {
        best_params,
        stopped_epoch: history.len(),
        best_epoch: stopper.best_epoch(),
        history,
    })
}

fn locate_param(net: &Network, index: usize) -> String {
    for (i, range) in net.layer_offsets().into_iter().enumerate() {
        if range.contains(&index) {
            return format!("layer {i} ({})", net.layers()[i].kind_name());
        }
    }
    format!("parameter {index}")
}
