use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Real;

/// Nested prior specification with all concentration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PriorFamily<T> {
    /// GEM(alpha) distributional weights, Dirichlet_L(b) observational weights.
    Fisan { alpha: T, l: usize, b: T },
    /// Dirichlet_K(a) distributional weights, Dirichlet_L(b) observational weights.
    Fsan { a: T, k: usize, l: usize, b: T },
    /// Nested Dirichlet process.
    Ndp { alpha: T, beta: T },
    /// Common atoms model.
    Cam { alpha: T, beta: T },
    /// Hidden hierarchical Dirichlet process.
    Hhdp { alpha: T, beta: T, beta0: T },
}

impl<T: Real> PriorFamily<T> {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let check_dim = |name: &str, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be at least 1")))
            }
        };
        match *self {
            PriorFamily::Fisan { alpha, l, b } => {
                check("alpha", alpha)?;
                check_dim("L", l)?;
                check("b", b)
            }
            PriorFamily::Fsan { a, k, l, b } => {
                check("a", a)?;
                check_dim("K", k)?;
                check_dim("L", l)?;
                check("b", b)
            }
            PriorFamily::Ndp { alpha, beta } | PriorFamily::Cam { alpha, beta } => {
                check("alpha", alpha)?;
                check("beta", beta)
            }
            PriorFamily::Hhdp { alpha, beta, beta0 } => {
                check("alpha", alpha)?;
                check("beta", beta)?;
                check("beta0", beta0)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PriorFamily::Fisan { .. } => "fiSAN",
            PriorFamily::Fsan { .. } => "fSAN",
            PriorFamily::Ndp { .. } => "nDP",
            PriorFamily::Cam { .. } => "CAM",
            PriorFamily::Hhdp { .. } => "HHDP",
        }
    }

    /// Probability that two groups share their distributional atom.
    pub fn distributional_tie_probability(&self) -> T {
        match *self {
            PriorFamily::Fsan { a, k, .. } => (T::one() + a) / (T::one() + T::from_usize_lossy(k) * a),
            PriorFamily::Fisan { alpha, .. }
            | PriorFamily::Ndp { alpha, .. }
            | PriorFamily::Cam { alpha, .. }
            | PriorFamily::Hhdp { alpha, .. } => (T::one() + alpha).recip(),
        }
    }
}

/// Law assigned to one concentration parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum HyperPrior {
    Fixed { value: f64 },
    /// Shape–rate parameterization.
    Gamma { shape: f64, rate: f64 },
}

impl HyperPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HyperPrior::Fixed { value } if value > 0.0 && value.is_finite() => Ok(()),
            HyperPrior::Gamma { shape, rate } if shape > 0.0 && rate > 0.0 => Ok(()),
            other => Err(Error::Config(format!("invalid hyperprior {other:?}"))),
        }
    }
}

/// Per-parameter hyperpriors for Monte Carlo prior summaries. Parameters left
/// unset keep the value stored in the family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperPriorSpec {
    pub alpha: Option<HyperPrior>,
    pub beta: Option<HyperPrior>,
    pub beta0: Option<HyperPrior>,
    pub a: Option<HyperPrior>,
    pub b: Option<HyperPrior>,
}

impl HyperPriorSpec {
    pub fn validate(&self) -> Result<()> {
        for h in [self.alpha, self.beta, self.beta0, self.a, self.b].into_iter().flatten() {
            h.validate()?;
        }
        Ok(())
    }
}

/// Cluster frequencies of two samples over a common set of labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSampleCounts {
    n1: Vec<usize>,
    n2: Vec<usize>,
}

impl TwoSampleCounts {
    /// Builds counts from per-label frequencies. Labels empty in both samples
    /// are dropped, so vectors of length L with trailing zeros are accepted.
    pub fn new(n1: Vec<usize>, n2: Vec<usize>) -> Result<Self> {
        if n1.len() != n2.len() {
            return Err(Error::Shape(format!(
                "frequency vectors of different lengths ({} vs {})",
                n1.len(),
                n2.len()
            )));
        }
        let (n1, n2) = n1
            .into_iter()
            .zip(n2)
            .filter(|(a, b)| a + b > 0)
            .unzip();
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> &[usize] {
        &self.n1
    }

    pub fn n2(&self) -> &[usize] {
        &self.n2
    }

    pub fn total1(&self) -> usize {
        self.n1.iter().sum()
    }

    pub fn total2(&self) -> usize {
        self.n2.iter().sum()
    }

    /// Number of labels present in both samples.
    pub fn s0(&self) -> usize {
        self.n1.iter().zip(&self.n2).filter(|(a, b)| **a > 0 && **b > 0).count()
    }

    /// Labels present only in the first sample.
    pub fn s1(&self) -> usize {
        self.n1.iter().zip(&self.n2).filter(|(a, b)| **a > 0 && **b == 0).count()
    }

    /// Labels present only in the second sample.
    pub fn s2(&self) -> usize {
        self.n1.iter().zip(&self.n2).filter(|(a, b)| **a == 0 && **b > 0).count()
    }

    /// Number of distinct labels s = s0 + s1 + s2.
    pub fn distinct(&self) -> usize {
        self.n1.len()
    }

    pub fn pooled(&self) -> Vec<usize> {
        self.n1.iter().zip(&self.n2).map(|(a, b)| a + b).collect()
    }
}
