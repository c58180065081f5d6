//! Log densities, normalizing constants and entropies.

use super::linalg::{Cholesky, SquareMatrix};
use super::scalar::Real;
use super::special::{digamma_unchecked, ln_gamma_unchecked, ln_multigamma};
use crate::error::{Error, Result};

/// ln φ_d(y | mean, precision⁻¹)
pub fn log_mvn_density<T: Real>(y: &[T], mean: &[T], precision: &SquareMatrix<T>) -> Result<T> {
    let d = precision.dim();
    if y.len() != d || mean.len() != d {
        return Err(Error::Shape(format!(
            "observation {} / mean {} / precision {d}x{d}",
            y.len(),
            mean.len()
        )));
    }
    let kernel = GaussianKernel::new(mean.to_vec(), precision.clone())?;
    Ok(kernel.log_density(y))
}

/// Gaussian kernel with cached precision log-determinant, for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct GaussianKernel<T> {
    mean: Vec<T>,
    precision: SquareMatrix<T>,
    log_norm: T,
}

impl<T: Real> GaussianKernel<T> {
    pub fn new(mean: Vec<T>, precision: SquareMatrix<T>) -> Result<Self> {
        if mean.len() != precision.dim() {
            return Err(Error::Shape(format!(
                "mean of length {} with {}x{} precision",
                mean.len(),
                precision.dim(),
                precision.dim()
            )));
        }
        let chol = precision.cholesky()?;
        let d = T::from_usize_lossy(mean.len());
        let log_norm = T::lit(0.5) * (chol.log_det - d * T::TAU().ln());
        Ok(Self {
            mean,
            precision,
            log_norm,
        })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn precision(&self) -> &SquareMatrix<T> {
        &self.precision
    }

    #[inline]
    pub fn log_density(&self, y: &[T]) -> T {
        let d = self.mean.len();
        if d == 1 {
            let r = y[0] - self.mean[0];
            return self.log_norm - T::lit(0.5) * self.precision[(0, 0)] * r * r;
        }
        let diff: Vec<T> = y.iter().zip(&self.mean).map(|(&a, &b)| a - b).collect();
        self.log_norm - T::lit(0.5) * self.precision.quad_form(&diff)
    }
}

/// ln C(params) = ln Γ(Σ params) - Σ ln Γ(param), the log normalizing constant
/// of a Dirichlet distribution.
pub fn dirichlet_log_norm<T: Real>(params: &[T]) -> Result<T> {
    if params.is_empty() {
        return Err(Error::domain("dirichlet_log_norm", "empty parameter vector"));
    }
    let mut total = T::zero();
    let mut acc = T::zero();
    for (i, &p) in params.iter().enumerate() {
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::domain(
                "dirichlet_log_norm",
                format!("parameter {i} must be positive, got {p}"),
            ));
        }
        total = total + p;
        acc = acc + ln_gamma_unchecked(p);
    }
    Ok(ln_gamma_unchecked(total) - acc)
}

/// ln C for a symmetric Dirichlet_L(b, …, b).
pub fn symmetric_dirichlet_log_norm<T: Real>(b: T, dim: usize) -> T {
    let l = T::from_usize_lossy(dim);
    ln_gamma_unchecked(l * b) - l * ln_gamma_unchecked(b)
}

/// Normalizer, entropy and expected log-determinant of a Wishart(scale, dof)
/// law with density ∝ |Λ|^{(dof-d-1)/2} exp(-tr(scale⁻¹ Λ)/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WishartSummary<T> {
    /// ln B(scale, dof), the log of the inverse normalizing constant.
    pub log_norm: T,
    pub entropy: T,
    /// E[ln |Λ|]
    pub expected_log_det: T,
}

pub fn wishart_log_norm_entropy<T: Real>(scale: &SquareMatrix<T>, dof: T) -> Result<WishartSummary<T>> {
    let chol = scale.cholesky()?;
    wishart_summary_from_logdet(chol.log_det, scale.dim(), dof)
}

pub fn wishart_summary_from_logdet<T: Real>(scale_log_det: T, d: usize, dof: T) -> Result<WishartSummary<T>> {
    let df = T::from_usize_lossy(d);
    if !(dof > df - T::one()) {
        return Err(Error::domain(
            "wishart_log_norm_entropy",
            format!("degrees of freedom {dof} must exceed dimension - 1 = {}", df - T::one()),
        ));
    }
    let half = T::lit(0.5);
    let ln2 = T::LN_2();
    let log_norm = -half * dof * scale_log_det - half * dof * df * ln2 - ln_multigamma(half * dof, d)?;
    let mut expected_log_det = df * ln2 + scale_log_det;
    for i in 0..d {
        expected_log_det = expected_log_det + digamma_unchecked(half * (dof - T::from_usize_lossy(i)));
    }
    let entropy = -log_norm - half * (dof - df - T::one()) * expected_log_det + half * dof * df;
    Ok(WishartSummary {
        log_norm,
        entropy,
        expected_log_det,
    })
}

/// ln of the Gamma(shape, rate) normalizing constant: shape·ln rate - ln Γ(shape).
pub fn gamma_log_norm<T: Real>(shape: T, rate: T) -> T {
    shape * rate.ln() - ln_gamma_unchecked(shape)
}

/// ln of the Beta(a, b) normalizing constant.
pub fn beta_log_norm<T: Real>(a: T, b: T) -> T {
    ln_gamma_unchecked(a + b) - ln_gamma_unchecked(a) - ln_gamma_unchecked(b)
}

/// Entropy of a Gamma(shape, rate) law.
pub fn gamma_entropy<T: Real>(shape: T, rate: T) -> T {
    shape - rate.ln() + ln_gamma_unchecked(shape) + (T::one() - shape) * digamma_unchecked(shape)
}

/// Plug-in helper shared with the kernel code: ln φ_d evaluated from a
/// Cholesky factor of the precision.
pub fn log_mvn_from_cholesky<T: Real>(y: &[T], mean: &[T], precision_chol: &Cholesky<T>) -> T {
    let d = mean.len();
    let diff: Vec<T> = y.iter().zip(mean).map(|(&a, &b)| a - b).collect();
    // ‖Lᵀ diff‖² = diffᵀ L Lᵀ diff
    let l = &precision_chol.lower;
    let mut q = T::zero();
    for j in 0..d {
        let mut s = T::zero();
        for i in j..d {
            s = s + l[(i, j)] * diff[i];
        }
        q = q + s * s;
    }
    T::lit(0.5) * (precision_chol.log_det - T::from_usize_lossy(d) * T::TAU().ln() - q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::special::ln_gamma;
    use approx::assert_abs_diff_eq;

    const LN_2PI: f64 = 1.837_877_066_409_345_5;

    #[test]
    fn univariate_standard_normal() {
        let p = SquareMatrix::identity(1);
        assert_abs_diff_eq!(log_mvn_density(&[0.0], &[0.0], &p).unwrap(), -0.5 * LN_2PI, epsilon = 1e-15);
        assert_abs_diff_eq!(
            log_mvn_density(&[1.0], &[0.0], &p).unwrap(),
            -0.5 * LN_2PI - 0.5,
            epsilon = 1e-15
        );
        assert!(log_mvn_density(&[1.0, 2.0], &[0.0], &p).is_err());
    }

    #[test]
    fn bivariate_matches_naive_formula() {
        // precision [[2, 0.6], [0.6, 1]]: inverse and determinant by hand
        let (a, b, c) = (2.0f64, 0.6, 1.0);
        let prec = SquareMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let det = a * c - b * b;
        let (y, mu) = ([0.3, -1.2], [1.0, 0.5]);
        let r = [y[0] - mu[0], y[1] - mu[1]];
        let quad = a * r[0] * r[0] + 2.0 * b * r[0] * r[1] + c * r[1] * r[1];
        let naive = -LN_2PI + 0.5 * det.ln() - 0.5 * quad;
        assert_abs_diff_eq!(log_mvn_density(&y, &mu, &prec).unwrap(), naive, epsilon = 1e-13);
        let chol = prec.cholesky().unwrap();
        assert_abs_diff_eq!(log_mvn_from_cholesky(&y, &mu, &chol), naive, epsilon = 1e-13);
    }

    #[test]
    fn dirichlet_normalizers() {
        assert_abs_diff_eq!(dirichlet_log_norm(&[1.0f64, 1.0]).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dirichlet_log_norm(&[2.0f64, 1.0]).unwrap(), 2f64.ln(), epsilon = 1e-14);
        let params = vec![0.05f64; 25];
        // term-by-term summation
        let mut oracle = 0.0f64;
        for _ in 0..25 {
            oracle -= ln_gamma(0.05f64).unwrap();
        }
        oracle += ln_gamma(1.25f64).unwrap();
        assert_abs_diff_eq!(dirichlet_log_norm(&params).unwrap(), oracle, epsilon = 1e-11);
        assert_abs_diff_eq!(symmetric_dirichlet_log_norm(0.05, 25), oracle, epsilon = 1e-11);
        assert!(dirichlet_log_norm(&[1.0f64, 0.0]).is_err());
    }

    #[test]
    fn dirichlet_kernel_integrates_to_one_in_two_dims() {
        // ∫₀¹ x^{a-1}(1-x)^{b-1} dx · C(a, b) = 1 by midpoint rule
        let (a, b) = (2.5f64, 3.5);
        let n = 200_000;
        let h = 1.0 / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0)
            })
            .sum::<f64>()
            * h;
        let c = dirichlet_log_norm(&[a, b]).unwrap().exp();
        assert_abs_diff_eq!(integral * c, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn wishart_one_dimensional_is_gamma() {
        // W_1(w, ν) = Gamma(shape ν/2, scale 2w)
        let (w, nu) = (0.7f64, 5.0);
        let s = wishart_log_norm_entropy(&SquareMatrix::from_diag(&[w]), nu).unwrap();
        let shape = nu / 2.0;
        let rate = 1.0 / (2.0 * w);
        assert_abs_diff_eq!(s.log_norm, gamma_log_norm(shape, rate), epsilon = 1e-13);
        assert_abs_diff_eq!(s.entropy, gamma_entropy(shape, rate), epsilon = 1e-13);
        assert_abs_diff_eq!(
            s.expected_log_det,
            crate::math::special::digamma(shape).unwrap() - rate.ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn wishart_identity_matches_product_of_gammas() {
        let d = 3usize;
        let nu = (d + 2) as f64;
        let s = wishart_log_norm_entropy(&SquareMatrix::identity(d), nu).unwrap();
        let mut lmg = (d * (d - 1)) as f64 / 4.0 * std::f64::consts::PI.ln();
        for i in 1..=d {
            lmg += ln_gamma((nu + 1.0 - i as f64) / 2.0).unwrap();
        }
        let oracle = -(nu * d as f64 / 2.0) * 2f64.ln() - lmg;
        assert_abs_diff_eq!(s.log_norm, oracle, epsilon = 1e-12);
    }

    #[test]
    fn wishart_entropy_scaling() {
        let d = 2usize;
        let base = SquareMatrix::from_rows(&[vec![1.0f64, 0.3], vec![0.3, 2.0]]).unwrap();
        let nu = 4.5;
        let c = 3.0f64;
        let s1 = wishart_log_norm_entropy(&base, nu).unwrap();
        let s2 = wishart_log_norm_entropy(&base.scale(c), nu).unwrap();
        // Λ → cΛ shifts the entropy by ln|J| = d(d+1)/2 · ln c
        assert_abs_diff_eq!(s2.entropy - s1.entropy, (d * (d + 1)) as f64 / 2.0 * c.ln(), epsilon = 1e-12);
        assert!(s2.entropy > s1.entropy);
        assert_abs_diff_eq!(s2.expected_log_det - s1.expected_log_det, d as f64 * c.ln(), epsilon = 1e-12);
        assert!(wishart_log_norm_entropy(&base, 0.5).is_err());
    }
}
