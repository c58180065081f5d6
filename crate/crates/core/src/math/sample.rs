//! Seeded samplers for the distribution families used by the Gibbs sampler
//! and the forward simulators.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01, StandardNormal};

use super::linalg::SquareMatrix;
use super::special::log_sum_exp;
use crate::error::{Error, Result};

/// Parameters of a distribution to draw from.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Beta { a: f64, b: f64 },
    /// Shape–rate parameterization.
    Gamma { shape: f64, rate: f64 },
    Dirichlet(Vec<f64>),
    /// Unnormalized nonnegative weights.
    Categorical(Vec<f64>),
    /// σ² ~ InvGamma(shape, rate), μ | σ² ~ N(mean, σ²/kappa).
    NormalInverseGamma { mean: f64, kappa: f64, shape: f64, rate: f64 },
    /// Λ ~ Wishart(scale, dof), μ | Λ ~ N(mean, (kappa Λ)⁻¹).
    NormalWishart { mean: Vec<f64>, kappa: f64, dof: f64, scale: SquareMatrix<f64> },
}

/// A single draw.
#[derive(Debug, Clone, PartialEq)]
pub enum Draw {
    Scalar(f64),
    Vector(Vec<f64>),
    Index(usize),
    MeanVariance { mean: f64, variance: f64 },
    MeanPrecision { mean: Vec<f64>, precision: SquareMatrix<f64> },
}

pub fn sample<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> Result<Draw> {
    Ok(match spec {
        DistributionSpec::Beta { a, b } => Draw::Scalar(beta(*a, *b, rng)?),
        DistributionSpec::Gamma { shape, rate } => Draw::Scalar(gamma(*shape, *rate, rng)?),
        DistributionSpec::Dirichlet(alpha) => Draw::Vector(dirichlet(alpha, rng)?),
        DistributionSpec::Categorical(w) => Draw::Index(categorical(w, rng)?),
        DistributionSpec::NormalInverseGamma { mean, kappa, shape, rate } => {
            let (mean, variance) = normal_inverse_gamma(*mean, *kappa, *shape, *rate, rng)?;
            Draw::MeanVariance { mean, variance }
        }
        DistributionSpec::NormalWishart { mean, kappa, dof, scale } => {
            let (mean, precision) = normal_wishart(mean, *kappa, *dof, scale, rng)?;
            Draw::MeanPrecision { mean, precision }
        }
    })
}

fn positive(op: &'static str, name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("{name} must be positive and finite, got {x}")))
    }
}

pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    positive("beta", "a", a)?;
    positive("beta", "b", b)?;
    let d = Beta::new(a, b).map_err(|e| Error::domain("beta", e.to_string()))?;
    Ok(d.sample(rng))
}

pub fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    positive("gamma", "shape", shape)?;
    positive("gamma", "rate", rate)?;
    let d = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain("gamma", e.to_string()))?;
    Ok(d.sample(rng))
}

/// ln of a Gamma(shape, 1) draw, accurate for tiny shapes where the draw
/// itself underflows: G(a) = G(a + 1) · U^{1/a}.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    positive("gamma", "shape", shape)?;
    if shape >= 1.0 {
        return Ok(gamma(shape, 1.0, rng)?.ln());
    }
    let g = gamma(shape + 1.0, 1.0, rng)?;
    let u: f64 = rng.sample(Open01);
    Ok(g.ln() + u.ln() / shape)
}

/// Dirichlet draw returned as log weights; never produces -∞ entries even
/// for concentrations like 0.05.
pub fn log_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::domain("dirichlet", "empty parameter vector"));
    }
    let mut logs = Vec::with_capacity(alpha.len());
    for &a in alpha {
        logs.push(log_gamma_variate(a, rng)?);
    }
    let lz = log_sum_exp(&logs);
    logs.iter_mut().for_each(|x| *x -= lz);
    Ok(logs)
}

pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    Ok(log_dirichlet(alpha, rng)?.into_iter().map(f64::exp).collect())
}

/// Index drawn proportionally to nonnegative weights.
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::domain("categorical", "weights must be finite and nonnegative"));
    }
    if !(total > 0.0) {
        return Err(Error::Numerical(format!(
            "categorical draw with zero total weight over {} outcomes",
            weights.len()
        )));
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return Ok(i);
        }
        u -= w;
    }
    // rounding: return the last outcome with positive weight
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
}

/// Index drawn proportionally to exp(log_weights).
pub fn categorical_log<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(format!(
            "categorical draw with zero total weight over {} outcomes (max log weight {max})",
            log_weights.len()
        )));
    }
    let w: Vec<f64> = log_weights.iter().map(|&x| (x - max).exp()).collect();
    categorical(&w, rng)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_inverse_gamma<R: Rng + ?Sized>(
    mean: f64,
    kappa: f64,
    shape: f64,
    rate: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    positive("normal_inverse_gamma", "kappa", kappa)?;
    let precision = gamma(shape, rate, rng)?;
    let variance = 1.0 / precision;
    let mu = mean + (variance / kappa).sqrt() * standard_normal(rng);
    Ok((mu, variance))
}

/// Wishart draw by the Bartlett decomposition.
pub fn wishart<R: Rng + ?Sized>(scale: &SquareMatrix<f64>, dof: f64, rng: &mut R) -> Result<SquareMatrix<f64>> {
    let d = scale.dim();
    if !(dof > d as f64 - 1.0) {
        return Err(Error::domain("wishart", format!("dof {dof} must exceed {}", d as f64 - 1.0)));
    }
    let chol = scale.cholesky()?;
    let mut a = SquareMatrix::zeros(d);
    for i in 0..d {
        // χ²(dof - i) = Gamma((dof - i)/2, rate 1/2)
        a[(i, i)] = gamma(0.5 * (dof - i as f64), 0.5, rng)?.sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let la = chol.lower.matmul(&a);
    let mut out = la.matmul(&la.transpose());
    out.symmetrize();
    Ok(out)
}

pub fn multivariate_normal_precision<R: Rng + ?Sized>(
    mean: &[f64],
    precision: &SquareMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let chol = precision.cholesky()?;
    // x = μ + L⁻ᵀ z has covariance (L Lᵀ)⁻¹
    let z: Vec<f64> = (0..mean.len()).map(|_| standard_normal(rng)).collect();
    let dx = chol.solve_upper(&z);
    Ok(mean.iter().zip(dx).map(|(m, e)| m + e).collect())
}

pub fn multivariate_normal_covariance<R: Rng + ?Sized>(
    mean: &[f64],
    covariance: &SquareMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let chol = covariance.cholesky()?;
    let z: Vec<f64> = (0..mean.len()).map(|_| standard_normal(rng)).collect();
    let dx = chol.lower.matvec(&z);
    Ok(mean.iter().zip(dx).map(|(m, e)| m + e).collect())
}

pub fn normal_wishart<R: Rng + ?Sized>(
    mean: &[f64],
    kappa: f64,
    dof: f64,
    scale: &SquareMatrix<f64>,
    rng: &mut R,
) -> Result<(Vec<f64>, SquareMatrix<f64>)> {
    positive("normal_wishart", "kappa", kappa)?;
    if mean.len() != scale.dim() {
        return Err(Error::Shape(format!("mean {} vs scale {}", mean.len(), scale.dim())));
    }
    let lambda = wishart(scale, dof, rng)?;
    let mu = multivariate_normal_precision(mean, &lambda.scale(kappa), rng)?;
    Ok((mu, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng::RngStream;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    fn within_se(xs: &[f64], target: f64, k: f64) {
        let (m, v) = mean_var(xs);
        let se = (v / xs.len() as f64).sqrt();
        assert!((m - target).abs() < k * se, "mean {m} target {target} se {se}");
    }

    const N: usize = 100_000;

    #[test]
    fn gamma_moments() {
        let mut rng = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..N).map(|_| gamma(2.0, 1.0, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 2.0).abs() < 0.02);
        within_se(&xs, 2.0, 4.0);
        assert!((v - 2.0).abs() < 4.0 * (2.0f64 * 2.0 * 2.0 * 3.0 / N as f64).sqrt() * 2.0);
        let xs: Vec<f64> = (0..N).map(|_| gamma(3.0, 4.0, &mut rng).unwrap()).collect();
        within_se(&xs, 0.75, 4.0);
    }

    #[test]
    fn beta_moments() {
        let mut rng = RngStream::new(2, 0);
        let xs: Vec<f64> = (0..N).map(|_| beta(2.0, 5.0, &mut rng).unwrap()).collect();
        within_se(&xs, 2.0 / 7.0, 4.0);
        assert!(beta(0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn dirichlet_symmetric_mean() {
        let mut rng = RngStream::new(3, 0);
        let mut sums = [0.0f64; 3];
        for _ in 0..N {
            let d = dirichlet(&[1.0, 1.0, 1.0], &mut rng).unwrap();
            for (s, x) in sums.iter_mut().zip(d) {
                *s += x;
            }
        }
        for s in sums {
            assert!((s / N as f64 - 1.0 / 3.0).abs() < 0.005);
        }
    }

    #[test]
    fn sparse_dirichlet_log_weights_are_finite() {
        let mut rng = RngStream::new(4, 0);
        let mut first = Vec::new();
        for _ in 0..20_000 {
            let lw = log_dirichlet(&[0.05; 25], &mut rng).unwrap();
            assert!(lw.iter().all(|x| x.is_finite()));
            first.push(lw[0].exp());
        }
        within_se(&first, 1.0 / 25.0, 4.0);
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = RngStream::new(5, 0);
        let w = [1.0, 0.0, 3.0];
        let mut counts = [0usize; 3];
        for _ in 0..N {
            counts[categorical(&w, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[1], 0);
        let p = counts[2] as f64 / N as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / N as f64).sqrt());
        assert!(matches!(categorical(&[0.0, 0.0], &mut rng), Err(Error::Numerical(_))));
        assert!(matches!(
            categorical_log(&[f64::NEG_INFINITY; 2], &mut rng),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn normal_inverse_gamma_moments() {
        let mut rng = RngStream::new(6, 0);
        let draws: Vec<(f64, f64)> = (0..N)
            .map(|_| normal_inverse_gamma(1.0, 0.5, 4.0, 3.0, &mut rng).unwrap())
            .collect();
        let mus: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let vars: Vec<f64> = draws.iter().map(|d| d.1).collect();
        within_se(&mus, 1.0, 4.0);
        within_se(&vars, 3.0 / 3.0, 4.0);
    }

    #[test]
    fn normal_wishart_moments() {
        let mut rng = RngStream::new(7, 0);
        let d = 2;
        let scale = SquareMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.5]]).unwrap();
        let dof = d as f64 + 2.0;
        let mut mu0 = Vec::new();
        let mut l00 = Vec::new();
        let mut l01 = Vec::new();
        for _ in 0..N {
            let (mu, lam) = normal_wishart(&[0.0, 0.0], 1.0, dof, &scale, &mut rng).unwrap();
            mu0.push(mu[0]);
            l00.push(lam[(0, 0)]);
            l01.push(lam[(0, 1)]);
        }
        within_se(&mu0, 0.0, 3.0);
        // E[Λ] = dof · scale
        within_se(&l00, dof * 1.0, 4.0);
        within_se(&l01, dof * 0.3, 4.0);
    }

    #[test]
    fn spec_dispatch_reproducible() {
        let spec = DistributionSpec::Gamma { shape: 2.0, rate: 1.0 };
        let a = sample(&spec, &mut RngStream::new(9, 1)).unwrap();
        let b = sample(&spec, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(sample(&DistributionSpec::Gamma { shape: -1.0, rate: 1.0 }, &mut RngStream::new(0, 0)).is_err());
    }
}
