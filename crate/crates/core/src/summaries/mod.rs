//! Partition point estimates, density estimates and evaluation metrics.

pub mod density;
pub mod partition;
pub mod relabel;

pub use density::{
    data_grid, density_mcmc, density_true, density_vi, kl_monte_carlo, kl_on_grid, linear_grid, DensityGrid,
};
pub use partition::{ari, mcmc_partition, psm_from_draws, vi_partition, Level, Partition, SimilarityMatrix};
pub use relabel::{assignment, relabel};
