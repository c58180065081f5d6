//! Blocked Gibbs sampler: slice-sampled GEM(α) (fiSAN) or Dirichlet (fSAN)
//! distributional weights, Dirichlet observational weights and conjugate
//! normal-Wishart atoms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::math::sample::{beta, categorical_log, gamma, log_dirichlet, log_gamma_variate};
use crate::math::special::log_sum_exp;
use crate::math::{GaussianKernel, RngStream, SquareMatrix};
use crate::model::ModelConfig;
use crate::prior::HyperPrior;

/// Largest number of distributional components the slice sampler may
/// instantiate.
pub const MAX_ACTIVE_COMPONENTS: usize = 1024;

/// ξ_k = 0.5^k for the 1-based component k; `c` is 0-based.
#[inline]
pub fn slice_level(c: usize) -> f64 {
    0.5f64.powi(c as i32 + 1)
}

/// Kernel parameters of one observational atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub mean: Vec<f64>,
    pub precision: SquareMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    /// Distributional labels S_j (0-based).
    pub s: Vec<usize>,
    /// Observational labels M in global observation order.
    pub m: Vec<usize>,
    /// ln π_k for the instantiated components.
    pub log_pi: Vec<f64>,
    /// Slice variables u_j (fiSAN).
    pub u: Vec<f64>,
    /// ln ω_{·,k}, one L-vector per instantiated component.
    pub log_omega: Vec<Vec<f64>>,
    pub atoms: Vec<Atom>,
    /// DP concentration (fiSAN); NaN for fSAN.
    pub alpha: f64,
}

impl GibbsState {
    /// Number of instantiated distributional components (K* or K).
    pub fn n_active(&self) -> usize {
        self.log_pi.len()
    }

    pub fn occupied_distributional(&self) -> usize {
        count_distinct(&self.s)
    }

    pub fn occupied_observational(&self) -> usize {
        count_distinct(&self.m)
    }

    /// ω_{·,S_j}, J × L row-major.
    pub fn group_weights(&self) -> Vec<f64> {
        self.s
            .iter()
            .flat_map(|&k| self.log_omega[k].iter().map(|x| x.exp()))
            .collect()
    }

    /// Conditional log-likelihood Σ ln φ(y | μ_{M}, Λ_{M}⁻¹).
    pub fn log_likelihood(&self, data: &GroupedDataset) -> Result<f64> {
        let kernels = self.kernels()?;
        Ok((0..data.n_obs()).map(|n| kernels[self.m[n]].log_density(data.obs(n))).sum())
    }

    fn kernels(&self) -> Result<Vec<GaussianKernel<f64>>> {
        self.atoms
            .iter()
            .map(|a| GaussianKernel::new(a.mean.clone(), a.precision.clone()))
            .collect()
    }

    pub fn check_invariants(&self, config: &ModelConfig, data: &GroupedDataset) -> Result<()> {
        let l = config.l();
        if self.s.len() != data.n_groups() || self.m.len() != data.n_obs() {
            return Err(Error::Shape("label vectors do not match the data".into()));
        }
        if self.s.iter().any(|&k| k >= self.n_active()) || self.m.iter().any(|&x| x >= l) {
            return Err(Error::Numerical("label out of range".into()));
        }
        if self.log_omega.len() != self.n_active() {
            return Err(Error::Shape("one ω vector per active component expected".into()));
        }
        for (k, w) in self.log_omega.iter().enumerate() {
            let total = log_sum_exp(w);
            if w.len() != l || total.abs() > 1e-9 {
                return Err(Error::Numerical(format!("ω_{k} does not sum to one (ln total {total})")));
            }
        }
        let total_pi = log_sum_exp(&self.log_pi);
        if total_pi > 1e-9 {
            return Err(Error::Numerical(format!("distributional weights exceed one (ln total {total_pi})")));
        }
        if let ModelConfig::Fisan(_) = config {
            for (j, (&u, &k)) in self.u.iter().zip(&self.s).enumerate() {
                if !(u > 0.0 && u < slice_level(k)) {
                    return Err(Error::Numerical(format!("slice variable u_{j} = {u} outside (0, ξ_{})", k + 1)));
                }
            }
        }
        Ok(())
    }
}

fn count_distinct(labels: &[usize]) -> usize {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// ln v and ln(1 − v) for v ~ Beta(a, b), via log-gamma variates.
fn log_beta_pair<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<(f64, f64)> {
    let x = log_gamma_variate(a, rng)?;
    let y = log_gamma_variate(b, rng)?;
    let z = log_sum_exp(&[x, y]);
    Ok((x - z, y - z))
}

fn prior_atoms<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Result<Vec<Atom>> {
    (0..config.l())
        .map(|_| {
            let (mean, precision) = config.kernel().sample(rng)?;
            Ok(Atom { mean, precision })
        })
        .collect()
}

/// Labels uniform (S over J components for fiSAN, over K for fSAN), atoms
/// from the base measure and weights from their priors.
pub fn init_chain(data: &GroupedDataset, config: &ModelConfig, rng: &mut RngStream) -> Result<GibbsState> {
    config.validate(data.dim())?;
    let (j, l) = (data.n_groups(), config.l());
    let b = config.b();
    let (alpha, width) = match config {
        ModelConfig::Fisan(c) => (
            match c.alpha {
                HyperPrior::Fixed { value } => value,
                HyperPrior::Gamma { shape, rate } => gamma(shape, rate, rng)?,
            },
            j,
        ),
        ModelConfig::Fsan(c) => (f64::NAN, c.k),
    };
    let s: Vec<usize> = (0..j).map(|_| rng.random_range(0..width)).collect();
    let m: Vec<usize> = (0..data.n_obs()).map(|_| rng.random_range(0..l)).collect();
    let log_pi = match config {
        ModelConfig::Fisan(_) => {
            let mut out = Vec::with_capacity(width);
            let mut rest = 0.0;
            for _ in 0..width {
                let (lv, l1v) = log_beta_pair(1.0, alpha, rng)?;
                out.push(rest + lv);
                rest += l1v;
            }
            out
        }
        ModelConfig::Fsan(c) => log_dirichlet(&vec![c.a; c.k], rng)?,
    };
    let log_omega = (0..width).map(|_| log_dirichlet(&vec![b; l], rng)).collect::<Result<_>>()?;
    let u = match config {
        ModelConfig::Fisan(_) => s.iter().map(|&k| rng.random::<f64>() * slice_level(k)).collect(),
        ModelConfig::Fsan(_) => Vec::new(),
    };
    Ok(GibbsState {
        s,
        m,
        log_pi,
        u,
        log_omega,
        atoms: prior_atoms(config, rng)?,
        alpha,
    })
}

/// n_{j,l}: observations of group j allocated to atom l, J × L.
fn group_counts(state: &GibbsState, data: &GroupedDataset, l: usize) -> Vec<usize> {
    let mut out = vec![0; data.n_groups() * l];
    for j in 0..data.n_groups() {
        for n in data.group_range(j) {
            out[j * l + state.m[n]] += 1;
        }
    }
    out
}

/// Unnormalized ln P(S_j = k | π, ω, M) over the active components, given
/// the atom counts of group j. With all counts zero this is the prior.
pub fn distributional_log_weights(state: &GibbsState, config: &ModelConfig, j: usize, counts: &[usize]) -> Vec<f64> {
    (0..state.n_active())
        .map(|k| {
            let prior = match config {
                ModelConfig::Fisan(_) => {
                    if state.u[j] < slice_level(k) {
                        state.log_pi[k] - slice_level(k).ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                ModelConfig::Fsan(_) => state.log_pi[k],
            };
            prior
                + counts
                    .iter()
                    .zip(&state.log_omega[k])
                    .filter(|(&c, _)| c > 0)
                    .map(|(&c, &w)| c as f64 * w)
                    .sum::<f64>()
        })
        .collect()
}

/// Step 1: slice variables and sticks (fiSAN) or Dirichlet weights (fSAN).
fn update_distributional_weights(state: &mut GibbsState, config: &ModelConfig, rng: &mut RngStream) -> Result<()> {
    match config {
        ModelConfig::Fisan(_) => {
            state.u.resize(state.s.len(), 0.0);
            for (u, &k) in state.u.iter_mut().zip(&state.s) {
                // Open01 keeps u strictly inside (0, ξ)
                let r: f64 = rng.sample(rand_distr::Open01);
                *u = r * slice_level(k);
            }
            let u_min = state.u.iter().copied().fold(f64::INFINITY, f64::min);
            let mut kstar = 1;
            while slice_level(kstar) > u_min {
                kstar += 1;
                if kstar > MAX_ACTIVE_COMPONENTS {
                    return Err(Error::Resource(format!(
                        "slice sampler needs more than {MAX_ACTIVE_COMPONENTS} components (min u = {u_min:e})"
                    )));
                }
            }
            let mut n = vec![0usize; kstar];
            for &k in &state.s {
                n[k] += 1;
            }
            let mut above = state.s.len();
            let mut rest = 0.0;
            state.log_pi.clear();
            for &nk in &n {
                above -= nk;
                let (lv, l1v) = log_beta_pair(1.0 + nk as f64, state.alpha + above as f64, rng)?;
                state.log_pi.push(rest + lv);
                rest += l1v;
            }
        }
        ModelConfig::Fsan(c) => {
            let mut counts = vec![c.a; c.k];
            for &k in &state.s {
                counts[k] += 1.0;
            }
            state.log_pi = log_dirichlet(&counts, rng)?;
        }
    }
    Ok(())
}

/// One full scan: distributional weights, observational weights, S, M, α,
/// atoms.
pub fn sweep(state: &mut GibbsState, data: &GroupedDataset, config: &ModelConfig, rng: &mut RngStream) -> Result<()> {
    let (l, b) = (config.l(), config.b());
    update_distributional_weights(state, config, rng)?;

    // observational weights for every active component
    let counts = group_counts(state, data, l);
    let active = state.n_active();
    let mut nlk = vec![vec![b; l]; active];
    for (j, &k) in state.s.iter().enumerate() {
        for x in 0..l {
            nlk[k][x] += counts[j * l + x] as f64;
        }
    }
    state.log_omega = nlk.iter().map(|p| log_dirichlet(p, rng)).collect::<Result<_>>()?;

    for j in 0..data.n_groups() {
        let w = distributional_log_weights(state, config, j, &counts[j * l..(j + 1) * l]);
        state.s[j] = categorical_log(&w, rng)
            .map_err(|e| Error::Numerical(format!("distributional label of group {j}: {e}")))?;
    }

    let kernels = state.kernels()?;
    let mut logw = vec![0.0; l];
    for j in 0..data.n_groups() {
        let lw = &state.log_omega[state.s[j]];
        for n in data.group_range(j) {
            let y = data.obs(n);
            for x in 0..l {
                logw[x] = lw[x] + kernels[x].log_density(y);
            }
            state.m[n] = categorical_log(&logw, rng)
                .map_err(|e| Error::Numerical(format!("observational label of observation {n}: {e}")))?;
        }
    }

    if let ModelConfig::Fisan(c) = config {
        if let HyperPrior::Gamma { shape, rate } = c.alpha {
            state.alpha = escobar_west(state.alpha, shape, rate, data.n_groups(), state.occupied_distributional(), rng)?;
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); l];
    for (n, &x) in state.m.iter().enumerate() {
        members[x].push(n);
    }
    for (x, idx) in members.iter().enumerate() {
        let post = config.kernel().posterior_from(idx.iter().map(|&n| data.obs(n)))?;
        let (mean, precision) = post.sample(rng)?;
        state.atoms[x] = Atom { mean, precision };
    }
    Ok(())
}

/// Auxiliary-variable update of a DP concentration with a Gamma(a, b)
/// prior, given `n` units in `k` occupied clusters.
pub fn escobar_west<R: Rng + ?Sized>(alpha: f64, a: f64, b: f64, n: usize, k: usize, rng: &mut R) -> Result<f64> {
    let eta = beta(alpha + 1.0, n as f64, rng)?;
    let rate = b - eta.ln();
    let (kf, nf) = (k as f64, n as f64);
    let odds = (a + kf - 1.0) / (nf * rate);
    let shape = if a + kf - 1.0 <= 0.0 || rng.random::<f64>() < odds / (1.0 + odds) {
        a + kf
    } else {
        a + kf - 1.0
    };
    gamma(shape, rate, rng)
}
