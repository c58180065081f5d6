//! Prior properties of nested mixture priors: correlations, co-clustering
//! probabilities and two-sample partition probability functions.

pub mod correlation;
pub mod family;
pub mod monte_carlo;
pub mod peppf;

pub use correlation::{cocluster_probs, correlation, distributional_cocluster_prob};
pub use family::{HyperPrior, HyperPriorSpec, PriorFamily, TwoSampleCounts};
pub use monte_carlo::{generative_peppf_frequency, mc_correlation, mc_correlation_with, McCorrelationOptions};
pub use peppf::{correction_constant, dirichlet_eppf, dp_eppf, peppf, peppf_terms, peppf_total_mass, PeppfTerms};
