//! Command-line front end for compositional function networks: architecture presets,
//! training and evaluation pipelines, interpretability reports and the seed benchmark.

pub mod pipeline;
pub mod presets;
pub mod report;
