//! Synthetic nested-mixture benchmarks and forward simulation of the
//! two-level allocations under a shared-atoms prior.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::math::sample::{beta, categorical, categorical_log, log_dirichlet, multivariate_normal_covariance};
use crate::math::{GaussianKernel, RngStream, SquareMatrix};
use crate::prior::monte_carlo::{MAX_STICKS, STICK_TOLERANCE};
use crate::prior::PriorFamily;

/// Generating labels and component parameters of a synthetic dataset.
/// Labels are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub distributional: Vec<usize>,
    pub observational: Vec<Vec<usize>>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<SquareMatrix<f64>>,
    /// Mixture weights over the atoms, one row per distributional cluster.
    pub weights: Vec<Vec<f64>>,
}

impl GroundTruth {
    /// Observational labels in global observation order.
    pub fn flat_observational(&self) -> Vec<usize> {
        self.observational.iter().flatten().copied().collect()
    }

    /// True density of group j at y.
    pub fn group_density(&self, j: usize, y: &[f64]) -> Result<f64> {
        let w = &self.weights[self.distributional[j]];
        let mut f = 0.0;
        for (l, &wl) in w.iter().enumerate() {
            if wl > 0.0 {
                let k = GaussianKernel::new(self.means[l].clone(), self.covariances[l].spd_inverse()?)?;
                f += wl * k.log_density(y).exp();
            }
        }
        Ok(f)
    }

    /// Draws one observation of group j, returning (atom, value).
    pub fn draw<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Result<(usize, Vec<f64>)> {
        let l = categorical(&self.weights[self.distributional[j]], rng)?;
        let y = multivariate_normal_covariance(&self.means[l], &self.covariances[l], rng)?;
        Ok((l, y))
    }
}

const BENCHMARK_GROUPS: usize = 6;

/// Groups 1–2 come from f1, 3–4 from f2 and 5–6 from f3.
fn benchmark_assignment() -> Vec<usize> {
    (0..BENCHMARK_GROUPS).map(|j| j / 2).collect()
}

/// Atoms sorted by location: −5, −2, 0, 2, 5.
fn benchmark_weights() -> Vec<Vec<f64>> {
    vec![
        vec![0.5, 0.5, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.5, 0.5],
        vec![0.0, 0.0, 1.0, 0.0, 0.0],
    ]
}

fn generate(truth_template: GroundTruth, n_per_group: usize, rng: &mut RngStream) -> Result<(GroupedDataset, GroundTruth)> {
    if n_per_group == 0 {
        return Err(Error::Config("n_per_group must be at least 1".into()));
    }
    let mut truth = truth_template;
    let mut groups = Vec::with_capacity(truth.distributional.len());
    for j in 0..truth.distributional.len() {
        let mut ys = Vec::with_capacity(n_per_group);
        let mut ms = Vec::with_capacity(n_per_group);
        for _ in 0..n_per_group {
            let (l, y) = truth.draw(j, rng)?;
            ms.push(l);
            ys.push(y);
        }
        truth.observational.push(ms);
        groups.push(ys);
    }
    Ok((GroupedDataset::new(groups)?, truth))
}

/// Six groups from three univariate mixtures with atoms at −5, −2, 0, 2, 5
/// and common variance 0.6².
pub fn univariate_benchmark(n_per_group: usize, rng: &mut RngStream) -> Result<(GroupedDataset, GroundTruth)> {
    let truth = GroundTruth {
        distributional: benchmark_assignment(),
        observational: Vec::new(),
        means: [-5.0, -2.0, 0.0, 2.0, 5.0].iter().map(|&m| vec![m]).collect(),
        covariances: vec![SquareMatrix::from_diag(&[0.36]); 5],
        weights: benchmark_weights(),
    };
    generate(truth, n_per_group, rng)
}

/// Band correlation: 1 on the diagonal, `rho` on the first off-diagonals.
pub fn band_correlation(d: usize, rho: f64) -> SquareMatrix<f64> {
    let mut m = SquareMatrix::identity(d);
    for i in 1..d {
        m[(i, i - 1)] = rho;
        m[(i - 1, i)] = rho;
    }
    m
}

/// Equicorrelation matrix.
pub fn exchangeable_correlation(d: usize, rho: f64) -> SquareMatrix<f64> {
    let mut m = SquareMatrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                m[(i, j)] = rho;
            }
        }
    }
    m
}

/// Multivariate analogue: means at −5, −2, 0, 2, 5 times the ones vector,
/// covariances 0.2·I, 0.2·R1, 0.2·R3, 0.2·I, 0.2·R2.
pub fn multivariate_benchmark(d: usize, n_per_group: usize, rng: &mut RngStream) -> Result<(GroupedDataset, GroundTruth)> {
    if !(2..=10).contains(&d) {
        return Err(Error::Config(format!("multivariate benchmark needs 2 ≤ d ≤ 10, got {d}")));
    }
    let ident = SquareMatrix::identity(d).scale(0.2);
    let r1 = band_correlation(d, 0.25).scale(0.2);
    let r2 = exchangeable_correlation(d, 0.5).scale(0.2);
    let r3 = exchangeable_correlation(d, 0.85).scale(0.2);
    let covariances = vec![ident.clone(), r1, r3, ident, r2];
    for (l, c) in covariances.iter().enumerate() {
        if !c.is_positive_definite() {
            return Err(Error::Numerical(format!("benchmark covariance {l} is not positive definite")));
        }
    }
    let truth = GroundTruth {
        distributional: benchmark_assignment(),
        observational: Vec::new(),
        means: [-5.0, -2.0, 0.0, 2.0, 5.0].iter().map(|&m| vec![m; d]).collect(),
        covariances,
        weights: benchmark_weights(),
    };
    generate(truth, n_per_group, rng)
}

/// Truncated GEM(α) weights: sticks are broken until the remaining mass is
/// below the tolerance, then renormalized.
pub fn truncated_gem<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut w = Vec::new();
    let mut rest = 1.0;
    while rest >= STICK_TOLERANCE {
        if w.len() == MAX_STICKS {
            return Err(Error::Truncation {
                residual: rest,
                sticks: w.len(),
            });
        }
        let v = beta(1.0, alpha, rng)?;
        w.push(rest * v);
        rest *= 1.0 - v;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// Forward simulation of the distributional labels S (length J) and the
/// observational labels M (J × n_per_group) from a SAN prior.
pub fn prior_generative_sample(
    family: &PriorFamily<f64>,
    j: usize,
    n_per_group: usize,
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    family.validate()?;
    let (pi, l, b) = match *family {
        PriorFamily::Fisan { alpha, l, b } => (truncated_gem(alpha, rng)?, l, b),
        PriorFamily::Fsan { a, k, l, b } => {
            let lw = log_dirichlet(&vec![a; k], rng)?;
            (lw.iter().map(|x| x.exp()).collect(), l, b)
        }
        other => {
            return Err(Error::Capability(format!(
                "generative sampling is only available for SAN priors, not {}",
                other.name()
            )))
        }
    };
    let s: Vec<usize> = (0..j).map(|_| categorical(&pi, rng)).collect::<Result<_>>()?;
    // observational weights only for the components in use, drawn in order
    // of first use
    let mut omega: Vec<Option<Vec<f64>>> = vec![None; pi.len()];
    let mut m = Vec::with_capacity(j);
    for &k in &s {
        if omega[k].is_none() {
            omega[k] = Some(log_dirichlet(&vec![b; l], rng)?);
        }
        let w = omega[k].as_ref().expect("drawn above");
        m.push((0..n_per_group).map(|_| categorical_log(w, rng)).collect::<Result<Vec<_>>>()?);
    }
    Ok((s, m))
}
