//! Nested mixture priors with shared atoms: prior properties, simulation,
//! variational and MCMC posterior inference, and posterior summaries.

pub mod benchmark;
pub mod cavi;
pub mod data;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod kernel;
pub mod math;
pub mod model;
pub mod prior;
pub mod simulate;
pub mod summaries;

pub use data::GroupedDataset;
pub use error::{Error, Result};
pub use kernel::NormalWishart;
pub use math::RngStream;
pub use model::{FisanConfig, FsanConfig, ModelConfig};

/// Double-precision square matrix.
pub type Matrix = math::SquareMatrix<f64>;
/// Prior family with double-precision parameters.
pub type Family = prior::PriorFamily<f64>;
