pub mod composition;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod math;
pub mod metrics;
pub mod model;
pub mod nodes;
pub mod train;

pub use error::{CfnError, Result};
