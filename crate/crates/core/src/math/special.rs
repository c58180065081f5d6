//! Special functions evaluated in log space.

use super::scalar::Real;
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Digamma function ψ(x) for x > 0.
///
/// Upward recurrence until x ≥ 6, then the asymptotic expansion.
pub fn digamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain("digamma", format!("argument must be positive, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

/// Digamma without argument validation. Callers guarantee x > 0.
#[inline]
pub fn digamma_unchecked<T: Real>(mut x: T) -> T {
    let mut acc = T::zero();
    let six = T::lit(6.0);
    while x < six {
        acc = acc - x.recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // Bernoulli-number series in 1/x²
    let series = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2
                                * (T::lit(1.0 / 240.0)
                                    - inv2
                                        * (T::lit(1.0 / 132.0)
                                            - inv2
                                                * (T::lit(691.0 / 32_760.0)
                                                    - inv2 * T::lit(1.0 / 12.0)))))));
    acc + x.ln() - T::lit(0.5) * inv - series
}

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("argument must be positive, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

/// ln Γ(x) without argument validation. Callers guarantee x > 0.
#[inline]
pub fn ln_gamma_unchecked<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range.
        return ln_gamma_unchecked(x + T::one()) - x.ln();
    }
    let z = x - T::one();
    let mut sum = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum = sum + T::lit(c) / (z + T::from_usize_lossy(i));
    }
    let t = z + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::TAU()).ln() + (z + T::lit(0.5)) * t.ln() - t + sum.ln()
}

/// ln n! computed through ln Γ(n + 1).
#[inline]
pub fn ln_factorial<T: Real>(n: usize) -> T {
    if n < 2 {
        return T::zero();
    }
    ln_gamma_unchecked(T::from_usize_lossy(n) + T::one())
}

/// Log of the multivariate gamma function Γ_d(a), requires a > (d - 1) / 2.
pub fn ln_multigamma<T: Real>(a: T, d: usize) -> Result<T> {
    let half = T::lit(0.5);
    if !(a > half * T::from_usize_lossy(d.saturating_sub(1))) {
        return Err(Error::domain(
            "ln_multigamma",
            format!("argument {a} too small for dimension {d}"),
        ));
    }
    let df = T::from_usize_lossy(d);
    let mut out = df * (df - T::one()) * T::lit(0.25) * T::PI().ln();
    for i in 0..d {
        out = out + ln_gamma_unchecked(a - half * T::from_usize_lossy(i));
    }
    Ok(out)
}

/// ln Σ exp(xᵢ), stable for large magnitudes. Returns -∞ on an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let s: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Overwrites unnormalized log weights with normalized probabilities using
/// max-shifted exponentiation. Returns the log normalizer.
pub fn normalize_log_weights<T: Real>(w: &mut [T]) -> T {
    let max = w.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for x in w.iter_mut() {
        *x = (*x - max).exp();
        total = total + *x;
    }
    for x in w.iter_mut() {
        *x = *x / total;
    }
    max + total.ln()
}

/// x ln x with the 0 ln 0 = 0 convention.
#[inline]
pub fn xlogx<T: Real>(x: T) -> T {
    if x > T::zero() {
        x * x.ln()
    } else {
        T::zero()
    }
}

/// Euler–Mascheroni constant.
pub fn euler_gamma<T: Real>() -> T {
    T::lit(EULER_GAMMA)
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b).
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}
