//! Normal-Wishart base measure of the Gaussian kernel parameters (μ, Λ).
//!
//! Λ ~ Wishart(scale, dof) with E[Λ] = dof·scale, and μ | Λ ~ N(mean, (κΛ)⁻¹).
//! In one dimension this is the normal-inverse-gamma law with
//! σ⁻² ~ Gamma(dof/2, rate 1/(2·scale)).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sample::normal_wishart;
use crate::math::SquareMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalWishart {
    pub mean: Vec<f64>,
    pub kappa: f64,
    pub dof: f64,
    pub scale: SquareMatrix<f64>,
}

impl NormalWishart {
    pub fn new(mean: Vec<f64>, kappa: f64, dof: f64, scale: SquareMatrix<f64>) -> Result<Self> {
        let nw = Self { mean, kappa, dof, scale };
        nw.validate()?;
        Ok(nw)
    }

    /// (μ, σ²) ~ NIG(mean, kappa, shape, rate): σ² ~ InvGamma(shape, rate),
    /// μ | σ² ~ N(mean, σ²/kappa).
    pub fn from_normal_inverse_gamma(mean: f64, kappa: f64, shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0) {
            return Err(Error::Config(format!("inverse-gamma shape {shape} and rate {rate} must be positive")));
        }
        Self::new(vec![mean], kappa, 2.0 * shape, SquareMatrix::from_diag(&[0.5 / rate]))
    }

    /// NIG(0, 0.01, 3, 2) for d = 1, NW(0, 0.01, d + 5, I) otherwise.
    pub fn default_for_dim(d: usize) -> Self {
        if d == 1 {
            Self::from_normal_inverse_gamma(0.0, 0.01, 3.0, 2.0).expect("valid defaults")
        } else {
            Self {
                mean: vec![0.0; d],
                kappa: 0.01,
                dof: d as f64 + 5.0,
                scale: SquareMatrix::identity(d),
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.scale.dim() != d {
            return Err(Error::Shape(format!(
                "kernel prior mean has length {d} but scale is {}×{}",
                self.scale.dim(),
                self.scale.dim()
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.dof > d as f64 - 1.0) {
            return Err(Error::Config(format!("dof {} must exceed d - 1 = {}", self.dof, d - 1)));
        }
        self.scale.check_symmetric()?;
        self.scale.cholesky()?;
        Ok(())
    }

    /// Conjugate update from weighted sufficient statistics: total weight
    /// `n`, weighted mean `ybar` and weighted scatter about `ybar`.
    pub fn posterior(&self, n: f64, ybar: &[f64], scatter: &SquareMatrix<f64>) -> Result<Self> {
        if n <= 0.0 {
            return Ok(self.clone());
        }
        let d = self.dim();
        let t = self.kappa + n;
        let mean: Vec<f64> = (0..d).map(|x| (self.kappa * self.mean[x] + n * ybar[x]) / t).collect();
        let mut inv = self.scale.spd_inverse()?;
        inv.add_scaled(1.0, scatter);
        let diff: Vec<f64> = ybar.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        inv.add_outer(self.kappa * n / t, &diff);
        inv.symmetrize();
        Ok(Self {
            mean,
            kappa: t,
            dof: self.dof + n,
            scale: inv.spd_inverse()?,
        })
    }

    /// Posterior given a set of observations with unit weights.
    pub fn posterior_from<'a>(&self, ys: impl Iterator<Item = &'a [f64]> + Clone) -> Result<Self> {
        let d = self.dim();
        let mut n = 0.0;
        let mut ybar = vec![0.0; d];
        for y in ys.clone() {
            n += 1.0;
            for x in 0..d {
                ybar[x] += y[x];
            }
        }
        if n == 0.0 {
            return Ok(self.clone());
        }
        ybar.iter_mut().for_each(|v| *v /= n);
        let mut scatter = SquareMatrix::zeros(d);
        for y in ys {
            let diff: Vec<f64> = y.iter().zip(&ybar).map(|(a, b)| a - b).collect();
            scatter.add_outer(1.0, &diff);
        }
        self.posterior(n, &ybar, &scatter)
    }

    /// Draws (μ, Λ).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, SquareMatrix<f64>)> {
        normal_wishart(&self.mean, self.kappa, self.dof, &self.scale, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RngStream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nig_mapping() {
        let nw = NormalWishart::default_for_dim(1);
        assert_eq!(nw.dof, 6.0);
        assert_abs_diff_eq!(nw.scale[(0, 0)], 0.25);
        // E[σ⁻²] = shape/rate = 1.5
        assert_abs_diff_eq!(nw.dof * nw.scale[(0, 0)], 1.5);
        let mv = NormalWishart::default_for_dim(3);
        assert_eq!(mv.dof, 8.0);
    }

    #[test]
    fn empty_update_is_prior() {
        let nw = NormalWishart::default_for_dim(2);
        let post = nw.posterior(0.0, &[0.0, 0.0], &SquareMatrix::zeros(2)).unwrap();
        assert_eq!(post, nw);
    }

    #[test]
    fn update_matches_hand_computation() {
        let nw = NormalWishart::from_normal_inverse_gamma(0.0, 1.0, 2.0, 1.0).unwrap();
        let ys = [[1.0], [3.0]];
        let post = nw.posterior_from(ys.iter().map(|y| &y[..])).unwrap();
        assert_abs_diff_eq!(post.kappa, 3.0);
        assert_abs_diff_eq!(post.mean[0], 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(post.dof, 6.0);
        // scale⁻¹ = 2 + 2 + (1·2/3)·4
        assert_abs_diff_eq!(1.0 / post.scale[(0, 0)], 4.0 + 8.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn precision_draw_mean() {
        let nw = NormalWishart::default_for_dim(2);
        let mut rng = RngStream::new(4, 0);
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += nw.sample(&mut rng).unwrap().1[(0, 0)];
        }
        // E[Λ] = dof · scale = 7
        assert!((acc / n as f64 - 7.0).abs() < 0.15);
    }

    #[test]
    fn rejects_invalid() {
        assert!(NormalWishart::new(vec![0.0; 2], 0.01, 0.5, SquareMatrix::identity(2)).is_err());
        assert!(NormalWishart::new(vec![0.0; 2], 0.0, 5.0, SquareMatrix::identity(2)).is_err());
        assert!(NormalWishart::new(vec![0.0; 3], 1.0, 5.0, SquareMatrix::identity(2)).is_err());
    }
}
