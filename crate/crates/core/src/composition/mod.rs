//! Sequential, parallel and conditional composition of function nodes.

mod layer;
mod network;
mod report;

pub use layer::{
    Combine, ConditionalLayer, Layer, LayerCache, LayerGrad, ParallelLayer, SequentialLayer,
    CONDITIONAL_EPSILON,
};
pub use network::{Network, NetworkCache, NetworkGrad};
pub use report::{render_text, LayerRecord, NetworkRecord};

#[cfg(test)]
mod tests;
