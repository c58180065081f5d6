//! Group density estimates on grids and divergences from the truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavi::VariationalState;
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::gibbs::ChainStore;
use crate::math::{GaussianKernel, RngStream};
use crate::simulate::GroundTruth;

/// Floor applied to estimated densities inside logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Density values of one group at a set of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Trapezoid integral over a univariate grid.
    pub fn mass(&self) -> Result<f64> {
        let xs = univariate_points(&self.points)?;
        Ok(trapezoid(&xs, &self.values))
    }
}

/// `n` equally spaced points on [lo, hi].
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![lo]];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| vec![lo + step * i as f64]).collect()
}

/// Univariate grid over the data range widened by `sds` standard deviations.
pub fn data_grid(data: &GroupedDataset, sds: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    if data.dim() != 1 {
        return Err(Error::Shape(format!("grids are univariate, data have dimension {}", data.dim())));
    }
    let sd = data.column_moments()[0].1;
    let (lo, hi) = data
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    Ok(linear_grid(lo - sds * sd, hi + sds * sd, n))
}

fn univariate_points(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| match p.as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::Shape("expected a univariate grid".into())),
        })
        .collect()
}

fn trapezoid(xs: &[f64], f: &[f64]) -> f64 {
    xs.windows(2)
        .zip(f.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn mixture(weights: &[f64], kernels: &[GaussianKernel<f64>], y: &[f64]) -> f64 {
    weights
        .iter()
        .zip(kernels)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, k)| w * k.log_density(y).exp())
        .sum()
}

/// Plug-in mixture density of group j: posterior-mean weights Σ_k ρ_{j,k} E[ω_k],
/// atom means m_l and covariance E[Λ_l]⁻¹ = (ν_l W_l)⁻¹. In one dimension
/// the kernel variance is the inverse-gamma mean, which needs ν_l > 2.
pub fn density_vi(state: &VariationalState, points: &[Vec<f64>], group: usize) -> Result<DensityGrid> {
    if group >= state.n_groups {
        return Err(Error::Shape(format!("group {group} out of range ({} groups)", state.n_groups)));
    }
    let mut weights = vec![0.0; state.l];
    for (k, &r) in state.rho_row(group).iter().enumerate() {
        for (w, o) in weights.iter_mut().zip(state.omega_mean(k)) {
            *w += r * o;
        }
    }
    let kernels = state
        .kernels
        .iter()
        .enumerate()
        .map(|(l, nw)| {
            let precision = if nw.dim() == 1 {
                if nw.dof <= 2.0 {
                    return Err(Error::Numerical(format!(
                        "plug-in variance of atom {l} undefined (inverse-gamma shape {} ≤ 1)",
                        nw.dof / 2.0
                    )));
                }
                nw.scale.scale(nw.dof - 2.0)
            } else {
                nw.scale.scale(nw.dof)
            };
            GaussianKernel::new(nw.mean.clone(), precision)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = points.iter().map(|y| mixture(&weights, &kernels, y)).collect();
    Ok(DensityGrid {
        points: points.to_vec(),
        values,
    })
}

/// Posterior mean density of group j: the mixture density of every stored
/// draw, averaged.
pub fn density_mcmc(chain: &ChainStore, points: &[Vec<f64>], group: usize) -> Result<DensityGrid> {
    if chain.draws.is_empty() {
        return Err(Error::Config("chain has no stored draws".into()));
    }
    if group >= chain.n_groups {
        return Err(Error::Shape(format!("group {group} out of range ({} groups)", chain.n_groups)));
    }
    let l = chain.l;
    let per_draw: Vec<Vec<f64>> = chain
        .draws
        .par_iter()
        .map(|d| {
            let kernels = d
                .atoms
                .iter()
                .map(|a| GaussianKernel::new(a.mean.clone(), a.precision.clone()))
                .collect::<Result<Vec<_>>>()?;
            let w = &d.group_weights[group * l..(group + 1) * l];
            Ok(points.iter().map(|y| mixture(w, &kernels, y)).collect())
        })
        .collect::<Result<_>>()?;
    let n = per_draw.len() as f64;
    let mut values = vec![0.0; points.len()];
    for row in &per_draw {
        for (v, x) in values.iter_mut().zip(row) {
            *v += x;
        }
    }
    values.iter_mut().for_each(|v| *v /= n);
    Ok(DensityGrid {
        points: points.to_vec(),
        values,
    })
}

pub fn density_true(truth: &GroundTruth, points: &[Vec<f64>], group: usize) -> Result<DensityGrid> {
    let values = points.iter().map(|y| truth.group_density(group, y)).collect::<Result<_>>()?;
    Ok(DensityGrid {
        points: points.to_vec(),
        values,
    })
}

/// Trapezoid-rule ∫ f ln(f / f̂) over a shared univariate grid.
pub fn kl_on_grid(f_true: &DensityGrid, f_hat: &DensityGrid) -> Result<f64> {
    if f_true.points != f_hat.points || f_true.values.len() != f_hat.values.len() {
        return Err(Error::Shape("densities are not on the same grid".into()));
    }
    let xs = univariate_points(&f_true.points)?;
    let integrand: Vec<f64> = f_true
        .values
        .iter()
        .zip(&f_hat.values)
        .map(|(&p, &q)| if p > 0.0 { p * (p / q.max(DENSITY_FLOOR)).ln() } else { 0.0 })
        .collect();
    Ok(trapezoid(&xs, &integrand))
}

/// Monte Carlo KL from the true density of group j to `f_hat`, averaging
/// ln f − ln f̂ over `n` draws from the truth.
pub fn kl_monte_carlo(
    truth: &GroundTruth,
    group: usize,
    f_hat: impl Fn(&[f64]) -> Result<f64>,
    n: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..n {
        let (_, y) = truth.draw(group, rng)?;
        total += truth.group_density(group, &y)?.ln() - f_hat(&y)?.max(DENSITY_FLOOR).ln();
    }
    Ok(total / n as f64)
}

/// Pointwise plug-in density of group j at a single point, for
/// multivariate divergences.
pub fn density_vi_at(state: &VariationalState, group: usize, y: &[f64]) -> Result<f64> {
    Ok(density_vi(state, &[y.to_vec()], group)?.values[0])
}
