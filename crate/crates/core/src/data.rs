//! Datasets: CSV ingestion, seeded splits, standardization and synthetic generators.

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CfnError, Result};
use crate::math::{Matrix, Rng};
use crate::metrics::{one_hot, Task};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    /// One column for regression and binary labels, one-hot columns for multiclass.
    pub y: Matrix,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub task: Task,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    /// Integer class labels (classification tasks only).
    pub fn labels(&self) -> Vec<usize> {
        match self.task {
            Task::Multiclass => self.y.argmax_rows(),
            _ => self.y.as_slice().iter().map(|&v| v as usize).collect(),
        }
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            task: self.task,
        }
    }

    /// Features then the target column as CSV; multiclass targets are written as integer labels.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let io = |e: csv::Error| CfnError::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.feature_names.clone();
        header.push(self.target_name.clone());
        w.write_record(&header).map_err(io)?;
        let labels = (self.task == Task::Multiclass).then(|| self.labels());
        for r in 0..self.len() {
            let mut row: Vec<String> = self.x.row(r).iter().map(|v| v.to_string()).collect();
            match &labels {
                Some(l) => row.push(l[r].to_string()),
                None => row.push(self.y.get(r, 0).to_string()),
            }
            w.write_record(&row).map_err(io)?;
        }
        w.into_inner().map_err(|e| CfnError::Io(e.into_error()))
    }

    /// Writes [`Dataset::to_csv`] through a temporary file, so `path` is never left half written.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::model::write_atomic(path, &self.to_csv()?)
    }
}

/// Reads a headered numeric CSV. Every column other than `target` becomes a feature, in file order.
pub fn load_csv(path: &Path, target: &str, task: Task) -> Result<Dataset> {
    let fail = |detail: String| CfnError::Ingestion {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| fail(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let target_col = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| fail(format!("target column `{target}` not found in header")))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let record = record.map_err(|e| fail(format!("line {line}: {e}")))?;
        if record.len() != header.len() {
            return Err(fail(format!(
                "line {line}: expected {} cells, found {}",
                header.len(),
                record.len()
            )));
        }
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                fail(format!("line {line}, column `{}`: `{cell}` is not a finite number", header[c]))
            })?;
            if c == target_col {
                targets.push((line, value));
            } else {
                features.push(value);
            }
        }
    }
    if targets.is_empty() {
        return Err(fail("no data rows".into()));
    }
    let n = targets.len();
    let x = Matrix::from_vec(n, feature_names.len(), features)?;
    let y = match task {
        Task::Regression => Matrix::column(&targets.iter().map(|t| t.1).collect::<Vec<_>>()),
        Task::Binary | Task::Multiclass => {
            let mut labels = Vec::with_capacity(n);
            for &(line, v) in &targets {
                if v < 0.0 || v.fract() != 0.0 || (task == Task::Binary && v > 1.0) {
                    return Err(fail(format!(
                        "line {line}, column `{target}`: `{v}` is not a valid {} label",
                        task.name()
                    )));
                }
                labels.push(v as usize);
            }
            if task == Task::Binary {
                Matrix::column(&labels.iter().map(|&l| l as f64).collect::<Vec<_>>())
            } else {
                let k = labels.iter().max().map_or(0, |m| m + 1);
                one_hot(&labels, k)?
            }
        }
    };
    Ok(Dataset {
        x,
        y,
        feature_names,
        target_name: target.to_string(),
        task,
    })
}

pub const DEFAULT_SPLIT_SEED: u64 = 42;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Seeded shuffle, then the first `⌈n(1−f)⌉` indices train and the rest test.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CfnError::arg(format!("test fraction {test_fraction} must lie in (0, 1)")));
    }
    // The small offset keeps products like 100 * 0.8 from rounding up past an exact integer.
    let n_train = (n as f64 * (1.0 - test_fraction) - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(CfnError::arg(format!(
            "splitting {n} rows at test fraction {test_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), test_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Column standardization statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(CfnError::arg("cannot fit a scaler on zero rows"));
        }
        let n = x.rows() as f64;
        let means: Vec<f64> = x.col_sums().into_iter().map(|s| s / n).collect();
        let mut stds = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for (c, v) in x.row(r).iter().enumerate() {
                stds[c] += (v - means[c]).powi(2);
            }
        }
        for (c, s) in stds.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                log::warn!("feature column {c} is constant; leaving its scale at 1");
                *s = 1.0;
            }
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.means.len() {
            return Err(CfnError::shape(format!(
                "scaler fitted on {} columns, data has {}",
                self.means.len(),
                x.cols()
            )));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.means[c]) / self.stds[c];
            }
        }
        Ok(out)
    }
}

/// Parameters of the noisy harmonic-motion generator `y = A sin(ωt + φ) + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShmParams {
    pub n: usize,
    pub amplitude: f64,
    pub omega: f64,
    pub phi: f64,
    pub noise_sd: f64,
    pub t_range: (f64, f64),
    pub seed: u64,
}

impl Default for ShmParams {
    fn default() -> Self {
        Self {
            n: 500,
            amplitude: 2.0,
            omega: 1.5,
            phi: FRAC_PI_4,
            noise_sd: 0.1,
            t_range: (0.0, 2.0 * PI),
            seed: 0,
        }
    }
}

pub fn gen_shm(p: &ShmParams) -> Result<Dataset> {
    if p.n < 2 || !(p.noise_sd >= 0.0) || !(p.t_range.1 > p.t_range.0) {
        return Err(CfnError::arg("gen_shm needs n >= 2, noise_sd >= 0 and a non-empty t range"));
    }
    let mut rng = Rng::new(p.seed);
    let mut t = Vec::with_capacity(p.n);
    let mut y = Vec::with_capacity(p.n);
    for _ in 0..p.n {
        let ti = rng.uniform(p.t_range.0, p.t_range.1);
        let clean = p.amplitude * (p.omega * ti + p.phi).sin();
        let noise = if p.noise_sd > 0.0 { rng.normal(0.0, p.noise_sd) } else { 0.0 };
        t.push(ti);
        y.push(clean + noise);
    }
    Ok(Dataset {
        x: Matrix::column(&t),
        y: Matrix::column(&y),
        feature_names: vec!["t".into()],
        target_name: "x".into(),
        task: Task::Regression,
    })
}

/// Total angle swept by each spiral arm between radius 0 and 1.
pub const SPIRAL_TURN: f64 = 1.5 * PI;

/// Interleaved spiral arms: class `k` point `i` sits at radius `(i+1)/n` and angle
/// `2πk/K + r·SPIRAL_TURN + noise`.
pub fn gen_spiral(n_per_class: usize, classes: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 || classes < 2 || !(noise_sd >= 0.0) {
        return Err(CfnError::arg("gen_spiral needs n_per_class >= 1, classes >= 2, noise_sd >= 0"));
    }
    let mut rng = Rng::new(seed);
    let mut x = Matrix::zeros(n_per_class * classes, 2);
    let mut labels = Vec::with_capacity(n_per_class * classes);
    for k in 0..classes {
        for i in 0..n_per_class {
            let r = (i + 1) as f64 / n_per_class as f64;
            let noise = if noise_sd > 0.0 { rng.normal(0.0, noise_sd) } else { 0.0 };
            let theta = 2.0 * PI * k as f64 / classes as f64 + r * SPIRAL_TURN + noise;
            let row = k * n_per_class + i;
            x.set(row, 0, r * theta.cos());
            x.set(row, 1, r * theta.sin());
            labels.push(k);
        }
    }
    Ok(Dataset {
        x,
        y: one_hot(&labels, classes)?,
        feature_names: vec!["x1".into(), "x2".into()],
        target_name: "label".into(),
        task: Task::Multiclass,
    })
}

/// Radii separating the four concentric regions.
pub const CONCENTRIC_BOUNDARIES: [f64; 3] = [0.8, 1.6, 2.4];
/// Width of the smooth transition centered on each boundary.
pub const CONCENTRIC_BLEND: f64 = 0.1;

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// The four regional target functions, innermost first.
pub fn concentric_region(region: usize, r: f64, theta: f64) -> f64 {
    match region {
        0 => (3.0 * r).sin(),
        1 => 0.5 * (r - 1.2).powi(2),
        2 => (-4.0 * (r - 2.0).powi(2)).exp(),
        _ => 0.2 * (2.0 * theta).sin(),
    }
}

/// Target surface of the concentric-regions problem at `(x1, x2)`.
pub fn concentric_target(x1: f64, x2: f64) -> f64 {
    let r = x1.hypot(x2);
    let theta = x2.atan2(x1);
    let mut value = concentric_region(0, r, theta);
    for (k, b) in CONCENTRIC_BOUNDARIES.iter().enumerate() {
        let s = smoothstep((r - b + CONCENTRIC_BLEND / 2.0) / CONCENTRIC_BLEND);
        if s > 0.0 {
            value = (1.0 - s) * value + s * concentric_region(k + 1, r, theta);
        }
    }
    value
}

/// Points uniform on `[-3, 3]²` labelled by [`concentric_target`].
pub fn gen_concentric(n: usize, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(CfnError::arg("gen_concentric needs n >= 4"));
    }
    let mut rng = Rng::new(seed);
    let x = rng.uniform_matrix(n, 2, -3.0, 3.0);
    let y: Vec<f64> = (0..n).map(|r| concentric_target(x.get(r, 0), x.get(r, 1))).collect();
    Ok(Dataset {
        x,
        y: Matrix::column(&y),
        feature_names: vec!["x1".into(), "x2".into()],
        target_name: "y".into(),
        task: Task::Regression,
    })
}
