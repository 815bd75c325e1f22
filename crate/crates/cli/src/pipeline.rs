//! Train / evaluate / benchmark pipelines shared by the binary and the test suites.

use std::time::Instant;

use serde::Serialize;

use cfn_core::composition::{Layer, Network};
use cfn_core::data::{split, Dataset, Scaler, DEFAULT_SPLIT_SEED, DEFAULT_TEST_FRACTION};
use cfn_core::loss::{loss, softmax, LossKind};
use cfn_core::math::{Matrix, Rng};
use cfn_core::metrics::{accuracy, rmse, roc_auc, AucScheme, Task};
use cfn_core::model::ModelFile;
use cfn_core::train::{train, Samples, TrainConfig, TrainResult};
use cfn_core::{CfnError, Result};

use crate::presets::Preset;

/// Command-line adjustments applied on top of a preset's training configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub preset: Preset,
    pub seed: u64,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub overrides: Overrides,
}

impl RunSpec {
    pub fn new(preset: Preset, seed: u64) -> Self {
        Self {
            preset,
            seed,
            split_seed: DEFAULT_SPLIT_SEED,
            test_fraction: DEFAULT_TEST_FRACTION,
            overrides: Overrides::default(),
        }
    }

    pub fn config(&self) -> TrainConfig {
        let o = &self.overrides;
        let base = self.preset.config();
        TrainConfig {
            epochs: o.epochs.unwrap_or(base.epochs),
            learning_rate: o.learning_rate.unwrap_or(base.learning_rate),
            batch_size: o.batch_size.unwrap_or(base.batch_size),
            patience: o.patience.unwrap_or(base.patience),
            seed: self.seed,
            ..base
        }
    }
}

/// Held-out metrics. Classification reports accuracy and ROC-AUC, regression reports RMSE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub task: Task,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
}

impl Metrics {
    /// `(name, value)` pairs in report order.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        [("accuracy", self.accuracy), ("auc", self.auc), ("rmse", self.rmse)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }
}

pub fn loss_for(task: Task) -> LossKind {
    match task {
        Task::Regression => LossKind::Mse,
        Task::Binary => LossKind::Bce,
        Task::Multiclass => LossKind::SoftmaxCe,
    }
}

fn scaled(scaler: Option<&Scaler>, x: &Matrix) -> Result<Matrix> {
    match scaler {
        Some(s) => s.apply(x),
        None => Ok(x.clone()),
    }
}

/// Network outputs on raw features: values, probabilities (binary) or class probabilities.
pub fn predict(net: &Network, scaler: Option<&Scaler>, x: &Matrix, task: Task) -> Result<Matrix> {
    if x.cols() != net.input_dim() {
        return Err(CfnError::Shape(format!(
            "model expects {} feature columns, data has {}",
            net.input_dim(),
            x.cols()
        )));
    }
    let out = net.forward(&scaled(scaler, x)?)?;
    Ok(match task {
        Task::Multiclass => softmax(&out),
        _ => out,
    })
}

pub fn evaluate(net: &Network, scaler: Option<&Scaler>, data: &Dataset) -> Result<Metrics> {
    if data.y.cols() != net.output_dim() {
        return Err(CfnError::Shape(format!(
            "model produces {} outputs, data has {} target columns",
            net.output_dim(),
            data.y.cols()
        )));
    }
    let pred = predict(net, scaler, &data.x, data.task)?;
    let mut m = Metrics {
        task: data.task,
        rows: data.len(),
        accuracy: None,
        auc: None,
        rmse: None,
    };
    match data.task {
        Task::Regression => m.rmse = Some(rmse(&pred, &data.y)?),
        Task::Binary => {
            m.accuracy = Some(accuracy(&pred, &data.y, Task::Binary)?);
            m.auc = Some(roc_auc(&pred, &data.y, AucScheme::Binary)?);
        }
        Task::Multiclass => {
            m.accuracy = Some(accuracy(&pred, &data.y, Task::Multiclass)?);
            m.auc = Some(roc_auc(&pred, &data.y, AucScheme::OneVsRestMacro)?);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub net: Network,
    pub scaler: Option<Scaler>,
    pub config: TrainConfig,
    pub result: TrainResult,
    pub metrics: Metrics,
    pub test: Dataset,
    pub seconds: f64,
}

/// Split, standardize, build the preset network, train, and score the held-out part.
pub fn fit(data: &Dataset, spec: &RunSpec) -> Result<Trained> {
    let start = Instant::now();
    let (train_set, test_set) = split(data, spec.test_fraction, spec.split_seed)?;
    let scaler = if spec.preset.scales_features() {
        Some(Scaler::fit(&train_set.x)?)
    } else {
        None
    };
    let train_x = scaled(scaler.as_ref(), &train_set.x)?;
    let test_x = scaled(scaler.as_ref(), &test_set.x)?;
    let mut rng = Rng::new(spec.seed);
    let mut net = spec.preset.build(data.x.cols(), data.task, data.y.cols(), &mut rng)?;
    if data.task == Task::Regression {
        center_output_bias(&mut net, &train_set.y)?;
    }
    let config = spec.config();
    let kind = loss_for(data.task);
    let result = train(
        &mut net,
        Samples::new(&train_x, &train_set.y),
        Samples::new(&test_x, &test_set.y),
        kind,
        &config,
    )?;
    let metrics = evaluate(&net, scaler.as_ref(), &test_set)?;
    Ok(Trained {
        net,
        scaler,
        config,
        result,
        metrics,
        test: test_set,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Starts a trailing trainable Linear node's bias at the training-target column means, so
/// regression targets in raw units (hundreds, say) need not be reached by small Adam steps.
pub fn center_output_bias(net: &mut Network, y: &Matrix) -> Result<()> {
    let Some(Layer::Sequential(last)) = net.layers().last() else {
        return Ok(());
    };
    let Some(node) = last.nodes().last() else {
        return Ok(());
    };
    if node.kind() != "Linear" || !node.is_trainable() || node.output_dim() != y.cols() {
        return Ok(());
    }
    let mut params = net.param_vector();
    let start = params.len() - y.cols();
    let rows = y.rows() as f64;
    for (p, s) in params[start..].iter_mut().zip(y.col_sums()) {
        *p = s / rows;
    }
    net.set_params(&params)
}

/// Mean loss of a fitted model on a dataset (features are scaled first).
pub fn data_loss(net: &Network, scaler: Option<&Scaler>, data: &Dataset) -> Result<f64> {
    let out = net.forward(&scaled(scaler, &data.x)?)?;
    Ok(loss(loss_for(data.task), &out, &data.y)?.0)
}

/// Model file with the run's provenance in its metadata block.
pub fn model_file(t: &Trained, data: &Dataset, spec: &RunSpec) -> ModelFile {
    let mut file = ModelFile::new(&t.net, t.scaler.clone());
    let meta = &mut file.metadata;
    meta.insert("preset".into(), spec.preset.name().into());
    meta.insert("task".into(), data.task.name().into());
    meta.insert("target".into(), data.target_name.clone().into());
    meta.insert("features".into(), data.feature_names.clone().into());
    meta.insert("loss".into(), loss_for(data.task).name().into());
    meta.insert("seed".into(), spec.seed.into());
    meta.insert("split_seed".into(), spec.split_seed.into());
    meta.insert("best_epoch".into(), t.result.best_epoch.into());
    meta.insert("stopped_epoch".into(), t.result.stopped_epoch.into());
    meta.insert(
        "train_config".into(),
        serde_json::to_value(&t.config).expect("plain struct"),
    );
    file
}

pub fn history_csv(result: &TrainResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CfnError::Io(std::io::Error::other(e));
    w.write_record(["epoch", "train_loss", "val_loss", "lr"]).map_err(io)?;
    for h in &result.history {
        w.write_record([
            h.epoch.to_string(),
            h.train_loss.to_string(),
            h.val_loss.to_string(),
            h.lr.to_string(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CfnError::Io(e.into_error()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 when only one run succeeded.
    pub sd: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub preset: String,
    pub task: Task,
    pub split_seed: u64,
    pub runs: Vec<SeedRun>,
    pub summary: Vec<Summary>,
    pub seconds: Summary,
    /// False when fewer than two runs succeeded and the standard deviations are placeholders.
    pub sd_defined: bool,
    pub failed: usize,
}

fn summarize(metric: &str, values: &[f64]) -> Summary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary {
        metric: metric.to_string(),
        mean,
        sd,
        runs: n,
    }
}

/// Runs the training pipeline once per seed with the split held fixed.
pub fn benchmark(data: &Dataset, base: &RunSpec, seeds: &[u64]) -> Result<BenchmarkReport> {
    if seeds.is_empty() {
        return Err(CfnError::Argument("benchmark needs at least one seed".into()));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let spec = RunSpec { seed, ..*base };
        let start = Instant::now();
        let run = match fit(data, &spec) {
            Ok(t) => SeedRun {
                seed,
                metrics: Some(t.metrics),
                error: None,
                seconds: t.seconds,
                best_epoch: Some(t.result.best_epoch),
            },
            Err(e) => {
                log::error!("seed {seed} failed: {e}");
                SeedRun {
                    seed,
                    metrics: None,
                    error: Some(e.to_string()),
                    seconds: start.elapsed().as_secs_f64(),
                    best_epoch: None,
                }
            }
        };
        runs.push(run);
    }
    let ok: Vec<&Metrics> = runs.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let mut summary = Vec::new();
    if let Some(first) = ok.first() {
        for (name, _) in first.values() {
            let values: Vec<f64> = ok
                .iter()
                .filter_map(|m| m.values().into_iter().find(|(k, _)| *k == name).map(|(_, v)| v))
                .collect();
            summary.push(summarize(name, &values));
        }
    }
    let times: Vec<f64> = runs.iter().map(|r| r.seconds).collect();
    Ok(BenchmarkReport {
        preset: base.preset.name().to_string(),
        task: data.task,
        split_seed: base.split_seed,
        sd_defined: ok.len() > 1,
        failed: runs.len() - ok.len(),
        seconds: summarize("seconds", &times),
        summary,
        runs,
    })
}
