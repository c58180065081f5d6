//! Gibbs sampler for fiSAN and fSAN mixtures of Gaussian kernels.

pub mod chain;
pub mod geweke;
pub mod sampler;

pub use chain::{run, ChainDraw, ChainMetadata, ChainStore, GibbsOptions};
pub use geweke::{successive_conditional_sample, GewekeRow};
pub use sampler::{init_chain, sweep, Atom, GibbsState};
