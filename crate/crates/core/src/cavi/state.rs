use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::kernel::NormalWishart;
use crate::math::sample::{categorical, dirichlet};
use crate::math::RngStream;
use crate::model::ModelConfig;
use crate::prior::HyperPrior;

/// How the responsibilities are initialized before the first sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Dirichlet(1, …, 1) rows for both responsibility tables.
    RandomResponsibility,
    /// Observations assigned (weight 0.95) to the nearest of L centers
    /// seeded by D² sampling.
    #[default]
    KmeansStyle,
}

/// Mean-field variational parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub n_groups: usize,
    pub n_obs: usize,
    pub l: usize,
    /// Distributional components: truncation T (fiSAN) or K (fSAN).
    pub t: usize,
    /// q(S_j = k), J × T row-major.
    pub rho: Vec<f64>,
    /// q(M_n = l), N × L row-major in global observation order.
    pub xi: Vec<f64>,
    /// Beta parameters of the T − 1 free sticks (fiSAN only).
    pub stick_a: Vec<f64>,
    pub stick_b: Vec<f64>,
    /// Dirichlet parameters of π (fSAN only).
    pub dist_dirichlet: Vec<f64>,
    /// Dirichlet parameters of ω_k, T × L row-major.
    pub p: Vec<f64>,
    /// Gamma (shape, rate) of q(α) when α has a hyperprior.
    pub alpha: Option<(f64, f64)>,
    /// Normal-Wishart posterior of each observational atom.
    pub kernels: Vec<NormalWishart>,
    pub elbo_trace: Vec<f64>,
}

impl VariationalState {
    pub fn rho_row(&self, j: usize) -> &[f64] {
        &self.rho[j * self.t..(j + 1) * self.t]
    }

    pub fn xi_row(&self, n: usize) -> &[f64] {
        &self.xi[n * self.l..(n + 1) * self.l]
    }

    pub fn p_row(&self, k: usize) -> &[f64] {
        &self.p[k * self.l..(k + 1) * self.l]
    }

    /// Σ_{i in group j} ξ_{i,l}, J × L row-major.
    pub fn group_sums(&self, data: &GroupedDataset) -> Vec<f64> {
        let l = self.l;
        let mut out = vec![0.0; self.n_groups * l];
        for j in 0..self.n_groups {
            let row = &mut out[j * l..(j + 1) * l];
            for n in data.group_range(j) {
                for (acc, &x) in row.iter_mut().zip(self.xi_row(n)) {
                    *acc += x;
                }
            }
        }
        out
    }

    /// Posterior mean of ω_k.
    pub fn omega_mean(&self, k: usize) -> Vec<f64> {
        let row = self.p_row(k);
        let total: f64 = row.iter().sum();
        row.iter().map(|x| x / total).collect()
    }

    pub fn last_elbo(&self) -> Option<f64> {
        self.elbo_trace.last().copied()
    }

    /// Checks the structural invariants: normalized responsibilities,
    /// positive parameters and kernel posteriors no weaker than the prior.
    pub fn check_invariants(&self, config: &ModelConfig) -> Result<()> {
        for (name, table, width) in [("rho", &self.rho, self.t), ("xi", &self.xi, self.l)] {
            for (r, row) in table.chunks(width).enumerate() {
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-12 || row.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::Numerical(format!("{name} row {r} is not a probability vector (sum {s})")));
                }
            }
        }
        let b = config.b();
        if self.p.iter().any(|&x| !(x >= b)) {
            return Err(Error::Numerical("observational Dirichlet parameter below b".into()));
        }
        let positive = |name: &str, xs: &[f64]| -> Result<()> {
            match xs.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                Some(i) => Err(Error::Numerical(format!("{name}[{i}] = {} is not positive", xs[i]))),
                None => Ok(()),
            }
        };
        positive("stick_a", &self.stick_a)?;
        positive("stick_b", &self.stick_b)?;
        positive("dist_dirichlet", &self.dist_dirichlet)?;
        if let Some((s1, s2)) = self.alpha {
            positive("alpha", &[s1, s2])?;
        }
        let prior = config.kernel();
        for (l, k) in self.kernels.iter().enumerate() {
            if k.kappa < prior.kappa || k.dof < prior.dof {
                return Err(Error::Numerical(format!("kernel {l} has t or c below the prior value")));
            }
            if !k.scale.is_positive_definite() {
                return Err(Error::NotPositiveDefinite { pivot: l });
            }
        }
        Ok(())
    }
}

fn dirichlet_rows<R: Rng + ?Sized>(rows: usize, width: usize, rng: &mut R) -> Result<Vec<f64>> {
    let ones = vec![1.0; width];
    let mut out = Vec::with_capacity(rows * width);
    for _ in 0..rows {
        out.extend(dirichlet(&ones, rng)?);
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// D² seeding of `l` centers among the observations.
fn seed_centers<R: Rng + ?Sized>(data: &GroupedDataset, l: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = data.n_obs();
    let mut centers = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data.obs(i), data.obs(centers[0]))).collect();
    while centers.len() < l {
        let next = if d2.iter().sum::<f64>() > 0.0 {
            categorical(&d2, rng)?
        } else {
            rng.random_range(0..n)
        };
        centers.push(next);
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_dist(data.obs(i), data.obs(next)));
        }
    }
    Ok(centers)
}

/// Draws initial responsibilities, then derives every other variational
/// factor from them so the state is internally consistent.
pub fn init_state(
    data: &GroupedDataset,
    config: &ModelConfig,
    strategy: InitStrategy,
    rng: &mut RngStream,
) -> Result<VariationalState> {
    config.validate(data.dim())?;
    let (j, n, l, t) = (data.n_groups(), data.n_obs(), config.l(), config.n_components());
    let rho = dirichlet_rows(j, t, rng)?;
    let xi = match strategy {
        InitStrategy::RandomResponsibility => dirichlet_rows(n, l, rng)?,
        InitStrategy::KmeansStyle => {
            let centers = seed_centers(data, l, rng)?;
            let mut xi = vec![0.0; n * l];
            let (hi, lo) = if l == 1 { (1.0, 0.0) } else { (0.95, 0.05 / (l - 1) as f64) };
            for i in 0..n {
                let y = data.obs(i);
                let nearest = (0..l)
                    .min_by(|&a, &b| {
                        sq_dist(y, data.obs(centers[a])).total_cmp(&sq_dist(y, data.obs(centers[b])))
                    })
                    .expect("l ≥ 1");
                let row = &mut xi[i * l..(i + 1) * l];
                row.fill(lo);
                row[nearest] = hi;
            }
            xi
        }
    };
    let (stick_len, dist_len) = match config {
        ModelConfig::Fisan(_) => (t - 1, 0),
        ModelConfig::Fsan(_) => (0, t),
    };
    let alpha = match config {
        ModelConfig::Fisan(c) => match c.alpha {
            HyperPrior::Gamma { shape, rate } => Some((shape, rate)),
            HyperPrior::Fixed { .. } => None,
        },
        ModelConfig::Fsan(_) => None,
    };
    let mut state = VariationalState {
        n_groups: j,
        n_obs: n,
        l,
        t,
        rho,
        xi,
        stick_a: vec![1.0; stick_len],
        stick_b: vec![1.0; stick_len],
        dist_dirichlet: vec![1.0; dist_len],
        p: vec![config.b(); t * l],
        alpha,
        kernels: vec![config.kernel().clone(); l],
        elbo_trace: Vec::new(),
    };
    super::update::update_omega(&mut state, data, config);
    super::update::update_distributional_weights(&mut state, config)?;
    super::update::update_kernels(&mut state, data, config)?;
    super::update::update_alpha(&mut state, config)?;
    let elbo = super::elbo::elbo(&state, data, config)?;
    state.elbo_trace.push(elbo);
    Ok(state)
}
