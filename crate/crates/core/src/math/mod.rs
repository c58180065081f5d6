//! Special functions, linear algebra, log densities and seeded sampling.

pub mod density;
pub mod linalg;
pub mod rng;
pub mod sample;
pub mod scalar;
pub mod special;

pub use density::{
    beta_log_norm, dirichlet_log_norm, gamma_entropy, gamma_log_norm, log_mvn_density,
    symmetric_dirichlet_log_norm, wishart_log_norm_entropy, GaussianKernel, WishartSummary,
};
pub use linalg::{cholesky_logdet, Cholesky, SquareMatrix};
pub use rng::RngStream;
pub use sample::{sample, Draw, DistributionSpec};
pub use scalar::Real;
pub use special::{digamma, ln_gamma, log_sum_exp, normalize_log_weights};
