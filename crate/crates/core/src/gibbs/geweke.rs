//! Joint-distribution check of the sampler: statistics from direct prior
//! predictive draws against those from a chain that alternates parameter
//! sweeps with regeneration of the data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler::{sweep, Atom, GibbsState};
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::math::sample::{categorical_log, gamma, log_dirichlet, multivariate_normal_precision};
use crate::math::RngStream;
use crate::model::ModelConfig;
use crate::prior::HyperPrior;

/// One tracked statistic under both simulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeRow {
    pub name: String,
    pub prior_mean: f64,
    pub prior_se: f64,
    pub chain_mean: f64,
    /// Batch-means standard error.
    pub chain_se: f64,
}

impl GewekeRow {
    /// Difference in units of the combined standard error.
    pub fn z(&self) -> f64 {
        let se = self.prior_se.hypot(self.chain_se);
        if se == 0.0 {
            if self.prior_mean == self.chain_mean { 0.0 } else { f64::INFINITY }
        } else {
            (self.chain_mean - self.prior_mean) / se
        }
    }
}

/// Parameters drawn from the prior; weights are drawn with enough sticks to
/// cover the sampled labels.
fn prior_state(config: &ModelConfig, j: usize, n_obs: usize, rng: &mut RngStream) -> Result<GibbsState> {
    let (l, b) = (config.l(), config.b());
    let (alpha, log_pi) = match config {
        ModelConfig::Fisan(c) => {
            let alpha = match c.alpha {
                HyperPrior::Fixed { value } => value,
                HyperPrior::Gamma { shape, rate } => gamma(shape, rate, rng)?,
            };
            (alpha, Vec::new())
        }
        ModelConfig::Fsan(c) => (f64::NAN, log_dirichlet(&vec![c.a; c.k], rng)?),
    };
    let mut state = GibbsState {
        s: Vec::with_capacity(j),
        m: Vec::with_capacity(n_obs),
        log_pi,
        u: Vec::new(),
        log_omega: Vec::new(),
        atoms: Vec::with_capacity(l),
        alpha,
    };
    match config {
        ModelConfig::Fisan(_) => {
            // sticks are broken lazily until the uniform falls under the covered mass
            let mut rest = 0.0f64;
            for _ in 0..j {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = 0;
                loop {
                    if k == state.log_pi.len() {
                        let v = crate::math::sample::beta(1.0, alpha, rng)?;
                        state.log_pi.push(rest + v.ln());
                        rest += (1.0 - v).ln();
                    }
                    acc += state.log_pi[k].exp();
                    if u < acc || k + 1 >= super::sampler::MAX_ACTIVE_COMPONENTS {
                        break;
                    }
                    k += 1;
                }
                state.s.push(k);
            }
        }
        ModelConfig::Fsan(_) => {
            for _ in 0..j {
                state.s.push(categorical_log(&state.log_pi, rng)?);
            }
        }
    }
    for _ in 0..state.log_pi.len() {
        state.log_omega.push(log_dirichlet(&vec![b; l], rng)?);
    }
    for _ in 0..l {
        let (mean, precision) = config.kernel().sample(rng)?;
        state.atoms.push(Atom { mean, precision });
    }
    Ok(state)
}

fn draw_observational_labels(state: &mut GibbsState, n_per_group: usize, rng: &mut RngStream) -> Result<()> {
    state.m.clear();
    for &k in &state.s {
        for _ in 0..n_per_group {
            state.m.push(categorical_log(&state.log_omega[k], rng)?);
        }
    }
    Ok(())
}

fn draw_data(state: &GibbsState, j: usize, n_per_group: usize, rng: &mut RngStream) -> Result<GroupedDataset> {
    let mut groups = Vec::with_capacity(j);
    let mut n = 0;
    for _ in 0..j {
        let mut g = Vec::with_capacity(n_per_group);
        for _ in 0..n_per_group {
            let atom = &state.atoms[state.m[n]];
            g.push(multivariate_normal_precision(&atom.mean, &atom.precision, rng)?);
            n += 1;
        }
        groups.push(g);
    }
    GroupedDataset::new(groups)
}

fn statistics(state: &GibbsState, data: &GroupedDataset, with_alpha: bool) -> Vec<f64> {
    let mu = state.atoms[0].mean[0];
    let mut out = vec![
        mu,
        mu * mu,
        state.atoms[0].precision.as_slice()[0],
        state.log_pi[0].exp(),
        state.log_omega[state.s[0]][0].exp(),
        state.occupied_distributional() as f64,
        state.occupied_observational() as f64,
        (state.s.len() > 1 && state.s[0] == state.s[1]) as u8 as f64,
        (state.m.len() > 1 && state.m[0] == state.m[1]) as u8 as f64,
        data.obs(0)[0],
        data.obs(0)[0].powi(2),
    ];
    if with_alpha {
        out.push(state.alpha);
    }
    out
}

const NAMES: [&str; 12] = [
    "mu_1",
    "mu_1^2",
    "lambda_1",
    "pi_1",
    "omega_{1,S_1}",
    "occupied_distributional",
    "occupied_observational",
    "S_1==S_2",
    "M_1==M_2",
    "y_11",
    "y_11^2",
    "alpha",
];

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn batch_means_se(xs: &[f64]) -> (f64, f64) {
    let n_batches = (xs.len() as f64).sqrt().floor().max(2.0) as usize;
    let size = xs.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let (_, se) = mean_se(&means);
    (xs.iter().sum::<f64>() / xs.len() as f64, se)
}

/// Runs `reps` independent prior-predictive draws and a successive-conditional
/// chain of `reps` records, each `sweeps_per_rep` parameter sweeps apart
/// with the data regenerated after every sweep.
pub fn successive_conditional_sample(
    config: &ModelConfig,
    j: usize,
    n_per_group: usize,
    sweeps_per_rep: usize,
    reps: usize,
    rng: &mut RngStream,
) -> Result<Vec<GewekeRow>> {
    if j == 0 || n_per_group == 0 || reps < 4 || sweeps_per_rep == 0 {
        return Err(Error::Config("successive-conditional test needs J, N_j, sweeps ≥ 1 and reps ≥ 4".into()));
    }
    if config.kernel().dim() != 1 {
        return Err(Error::Config("successive-conditional test is univariate".into()));
    }
    let with_alpha = matches!(config, ModelConfig::Fisan(c) if matches!(c.alpha, HyperPrior::Gamma { .. }));
    let n_stats = if with_alpha { NAMES.len() } else { NAMES.len() - 1 };

    let mut prior_stats = vec![Vec::with_capacity(reps); n_stats];
    for _ in 0..reps {
        let mut state = prior_state(config, j, j * n_per_group, rng)?;
        draw_observational_labels(&mut state, n_per_group, rng)?;
        let data = draw_data(&state, j, n_per_group, rng)?;
        for (col, v) in prior_stats.iter_mut().zip(statistics(&state, &data, with_alpha)) {
            col.push(v);
        }
    }

    let mut chain_stats = vec![Vec::with_capacity(reps); n_stats];
    let mut state = prior_state(config, j, j * n_per_group, rng)?;
    draw_observational_labels(&mut state, n_per_group, rng)?;
    let mut data = draw_data(&state, j, n_per_group, rng)?;
    for _ in 0..reps {
        for _ in 0..sweeps_per_rep {
            sweep(&mut state, &data, config, rng)?;
            data = draw_data(&state, j, n_per_group, rng)?;
        }
        for (col, v) in chain_stats.iter_mut().zip(statistics(&state, &data, with_alpha)) {
            col.push(v);
        }
    }

    Ok((0..n_stats)
        .map(|i| {
            let (prior_mean, prior_se) = mean_se(&prior_stats[i]);
            let (chain_mean, chain_se) = batch_means_se(&chain_stats[i]);
            GewekeRow {
                name: NAMES[i].to_string(),
                prior_mean,
                prior_se,
                chain_mean,
                chain_se,
            }
        })
        .collect())
}
