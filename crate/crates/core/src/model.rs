//! Model configurations shared by the variational and MCMC backends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::NormalWishart;
use crate::prior::{HyperPrior, PriorFamily};

/// Finite-infinite SAN: GEM(α) distributional weights truncated at `t`
/// components by the variational family, Dirichlet_L(b) observational weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisanConfig {
    pub l: usize,
    pub t: usize,
    pub b: f64,
    pub alpha: HyperPrior,
    pub kernel: NormalWishart,
}

/// Finite SAN: Dirichlet_K(a) distributional and Dirichlet_L(b)
/// observational weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsanConfig {
    pub k: usize,
    pub l: usize,
    pub a: f64,
    pub b: f64,
    pub kernel: NormalWishart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelConfig {
    Fisan(FisanConfig),
    Fsan(FsanConfig),
}

impl FisanConfig {
    /// L = 25, T = 20, b = 0.05, α ~ Gamma(1, 1).
    pub fn default_for_dim(d: usize) -> Self {
        Self {
            l: 25,
            t: 20,
            b: 0.05,
            alpha: HyperPrior::Gamma { shape: 1.0, rate: 1.0 },
            kernel: NormalWishart::default_for_dim(d),
        }
    }
}

impl FsanConfig {
    /// K = 20, L = 25, a = b = 0.05.
    pub fn default_for_dim(d: usize) -> Self {
        Self {
            k: 20,
            l: 25,
            a: 0.05,
            b: 0.05,
            kernel: NormalWishart::default_for_dim(d),
        }
    }
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Fisan(_) => "fisan",
            ModelConfig::Fsan(_) => "fsan",
        }
    }

    pub fn l(&self) -> usize {
        match self {
            ModelConfig::Fisan(c) => c.l,
            ModelConfig::Fsan(c) => c.l,
        }
    }

    /// Number of distributional components: the truncation T or K.
    pub fn n_components(&self) -> usize {
        match self {
            ModelConfig::Fisan(c) => c.t,
            ModelConfig::Fsan(c) => c.k,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            ModelConfig::Fisan(c) => c.b,
            ModelConfig::Fsan(c) => c.b,
        }
    }

    pub fn kernel(&self) -> &NormalWishart {
        match self {
            ModelConfig::Fisan(c) => &c.kernel,
            ModelConfig::Fsan(c) => &c.kernel,
        }
    }

    /// Prior family at a representative α (the hyperprior mean when random).
    pub fn prior_family(&self) -> PriorFamily<f64> {
        match self {
            ModelConfig::Fisan(c) => PriorFamily::Fisan {
                alpha: match c.alpha {
                    HyperPrior::Fixed { value } => value,
                    HyperPrior::Gamma { shape, rate } => shape / rate,
                },
                l: c.l,
                b: c.b,
            },
            ModelConfig::Fsan(c) => PriorFamily::Fsan { a: c.a, k: c.k, l: c.l, b: c.b },
        }
    }

    /// Checks the configuration against data of dimension `d`. Emits a
    /// warning when b is not small enough to empty superfluous components.
    pub fn validate(&self, d: usize) -> Result<()> {
        let kernel = self.kernel();
        kernel.validate()?;
        if kernel.dim() != d {
            return Err(Error::Config(format!(
                "kernel prior has dimension {} but the data have dimension {d}",
                kernel.dim()
            )));
        }
        if self.l() == 0 || self.n_components() == 0 {
            return Err(Error::Config("L and the number of distributional components must be ≥ 1".into()));
        }
        let b = self.b();
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::Config(format!("b must be positive, got {b}")));
        }
        match self {
            ModelConfig::Fisan(c) => c.alpha.validate()?,
            ModelConfig::Fsan(c) => {
                if !(c.a > 0.0 && c.a.is_finite()) {
                    return Err(Error::Config(format!("a must be positive, got {}", c.a)));
                }
            }
        }
        let zeta = (d + d * (d + 1) / 2) as f64;
        if b >= zeta / 2.0 {
            log::warn!("b = {b} is not below ζ/2 = {}; superfluous components may not empty", zeta / 2.0);
        }
        Ok(())
    }
}
