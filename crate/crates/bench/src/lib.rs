//! Shared fixtures for the criterion benchmarks under `benches/`.

use cfn_cli::presets::Preset;
use cfn_core::composition::Network;
use cfn_core::math::{Matrix, Rng};
use cfn_core::metrics::Task;

/// A freshly initialized tabular network and a random batch for it.
pub fn tabular_fixture(features: usize, rows: usize, task: Task, seed: u64) -> (Network, Matrix) {
    let mut rng = Rng::new(seed);
    let outputs = if task == Task::Multiclass { 3 } else { 1 };
    let net = Preset::Tabular
        .build(features, task, outputs, &mut rng)
        .expect("valid preset shape");
    (net, rng.normal_matrix(rows, features))
}
