//! Simulation replications: generate a benchmark dataset, fit it, and score
//! the fit against the truth.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cavi::{fit, FitOptions};
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::gibbs::{self, ChainStore, GibbsOptions};
use crate::math::RngStream;
use crate::model::{FisanConfig, ModelConfig};
use crate::simulate::{multivariate_benchmark, univariate_benchmark, GroundTruth};
use crate::summaries::{
    ari, data_grid, density_mcmc, density_true, density_vi, kl_monte_carlo, kl_on_grid, mcmc_partition,
    psm_from_draws, vi_partition, Level,
};

/// Grid size for univariate divergences.
pub const KL_GRID_POINTS: usize = 2000;
/// Grid half-width beyond the data range, in standard deviations.
pub const KL_GRID_SDS: f64 = 3.0;
/// Draws from the truth per group for multivariate divergences.
pub const KL_MC_SAMPLES: usize = 2000;
/// At most this many evenly spaced stored draws enter a posterior mean density.
pub const DENSITY_MAX_DRAWS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Design {
    Univariate,
    Multivariate { dim: usize },
}

impl Design {
    pub fn simulate(&self, n_per_group: usize, rng: &mut RngStream) -> Result<(GroupedDataset, GroundTruth)> {
        match *self {
            Design::Univariate => univariate_benchmark(n_per_group, rng),
            Design::Multivariate { dim } => multivariate_benchmark(dim, n_per_group, rng),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Design::Univariate => "univariate".into(),
            Design::Multivariate { dim } => format!("multivariate-d{dim}"),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Design::Univariate => 1,
            Design::Multivariate { dim } => dim,
        }
    }
}

/// Scores of one fitted replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub distributional_ari: f64,
    pub observational_ari: f64,
    /// KL from the true to the estimated density, per group.
    pub kl: Vec<f64>,
    pub distributional_labels: Vec<usize>,
    pub observational_labels: Vec<usize>,
    /// Wall time of the fit in seconds; for VI, the longest single restart.
    pub runtime_seconds: f64,
    /// Total wall time including every restart.
    pub total_seconds: f64,
    /// Bytes of parameter storage held by the fitted state or stored chain.
    pub state_bytes: usize,
}

impl Scores {
    pub fn kl_median(&self) -> f64 {
        median(&self.kl)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Default fiSAN configuration for data of dimension `d`.
pub fn default_model(d: usize) -> ModelConfig {
    ModelConfig::Fisan(FisanConfig::default_for_dim(d))
}

fn divergences(
    data: &GroupedDataset,
    truth: &GroundTruth,
    rng: &mut RngStream,
    estimate: impl Fn(&[Vec<f64>], usize) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    if data.dim() == 1 {
        let grid = data_grid(data, KL_GRID_SDS, KL_GRID_POINTS)?;
        (0..data.n_groups())
            .map(|j| {
                let f = density_true(truth, &grid, j)?;
                let values = estimate(&grid, j)?;
                let g = crate::summaries::DensityGrid { points: grid.clone(), values };
                kl_on_grid(&f, &g)
            })
            .collect()
    } else {
        (0..data.n_groups())
            .map(|j| kl_monte_carlo(truth, j, |y| Ok(estimate(&[y.to_vec()], j)?[0]), KL_MC_SAMPLES, rng))
            .collect()
    }
}

pub fn score_vi(
    data: &GroupedDataset,
    truth: &GroundTruth,
    config: &ModelConfig,
    opts: &FitOptions,
    rng: &RngStream,
) -> Result<Scores> {
    let start = Instant::now();
    let res = fit(data, config, opts, rng)?;
    let total_seconds = start.elapsed().as_secs_f64();
    let (s, m) = vi_partition(&res.best);
    let st = &res.best;
    let d = data.dim();
    let state_bytes = 8
        * (st.rho.len()
            + st.xi.len()
            + st.stick_a.len()
            + st.stick_b.len()
            + st.dist_dirichlet.len()
            + st.p.len()
            + st.kernels.len() * (d + 2 + d * d));
    let mut kl_rng = rng.child(u32::MAX as u64);
    let kl = divergences(data, truth, &mut kl_rng, |pts, j| Ok(density_vi(st, pts, j)?.values))?;
    Ok(Scores {
        distributional_ari: ari(&s.labels, &truth.distributional)?,
        observational_ari: ari(&m.labels, &truth.flat_observational())?,
        kl,
        distributional_labels: s.labels,
        observational_labels: m.labels,
        runtime_seconds: res.max_run_seconds(),
        total_seconds,
        state_bytes,
    })
}

/// Evenly spaced subset of at most `max` stored draws.
pub fn thin_for_density(chain: &ChainStore, max: usize) -> ChainStore {
    let n = chain.draws.len();
    if n <= max {
        return chain.clone();
    }
    let mut out = chain.clone();
    out.draws = (0..max).map(|i| chain.draws[i * n / max].clone()).collect();
    out
}

/// Partition point estimates from a chain.
pub fn chain_partitions(chain: &ChainStore) -> Result<(Vec<usize>, Vec<usize>)> {
    if chain.draws.is_empty() {
        return Err(Error::Config("chain has no stored draws".into()));
    }
    let s = mcmc_partition(&psm_from_draws(chain.draws.iter().map(|d| d.s.as_slice()))?, Level::Distributional);
    let m = mcmc_partition(&psm_from_draws(chain.draws.iter().map(|d| d.m.as_slice()))?, Level::Observational);
    Ok((s.labels, m.labels))
}

pub fn score_gibbs(
    data: &GroupedDataset,
    truth: &GroundTruth,
    config: &ModelConfig,
    opts: &GibbsOptions,
    rng: &RngStream,
) -> Result<Scores> {
    let start = Instant::now();
    let chain = gibbs::run(data, config, opts, &mut rng.child(0))?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let (s, m) = chain_partitions(&chain)?;
    let state_bytes = 8 * chain.draws.len() * chain.column_names().len();
    let thinned = thin_for_density(&chain, DENSITY_MAX_DRAWS);
    let mut kl_rng = rng.child(1);
    let kl = divergences(data, truth, &mut kl_rng, |pts, j| Ok(density_mcmc(&thinned, pts, j)?.values))?;
    Ok(Scores {
        distributional_ari: ari(&s, &truth.distributional)?,
        observational_ari: ari(&m, &truth.flat_observational())?,
        kl,
        distributional_labels: s,
        observational_labels: m,
        runtime_seconds,
        total_seconds: runtime_seconds,
        state_bytes,
    })
}

/// Random streams of replication `r` under `seed`: (data, VI, Gibbs).
pub fn replication_streams(seed: u64, r: usize) -> (RngStream, RngStream, RngStream) {
    let base = RngStream::new(seed, 0).child(r as u64);
    (base.child(0), base.child(1), base.child(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn vi_replication_smoke() {
        let (mut data_rng, vi_rng, _) = replication_streams(1, 0);
        let (ds, truth) = Design::Univariate.simulate(20, &mut data_rng).unwrap();
        let opts = FitOptions { restarts: 2, ..Default::default() };
        let scores = score_vi(&ds, &truth, &default_model(1), &opts, &vi_rng).unwrap();
        assert_eq!(scores.kl.len(), 6);
        assert!(scores.kl.iter().all(|k| *k > -1e-6 && k.is_finite()));
        assert!(scores.distributional_ari <= 1.0 && scores.state_bytes > 0);
    }
}
