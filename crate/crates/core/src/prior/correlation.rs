use super::family::PriorFamily;
use crate::error::{Error, Result};
use crate::math::Real;

/// Correlation between G_j(A) and G_j'(A) for two random measures drawn from
/// the nested prior, at fixed concentration parameters.
pub fn correlation<T: Real>(family: &PriorFamily<T>) -> Result<T> {
    family.validate()?;
    let one = T::one();
    Ok(match *family {
        PriorFamily::Fisan { alpha, l, b } => {
            let l = T::from_usize_lossy(l);
            one - alpha * (l - one) / (l * (alpha + one) * (b + one))
        }
        PriorFamily::Fsan { a, k, l, b } => {
            let (k, l) = (T::from_usize_lossy(k), T::from_usize_lossy(l));
            one - a * (k - one) * (l - one) / (l * (k * a + one) * (b + one))
        }
        PriorFamily::Ndp { alpha, .. } => (one + alpha).recip(),
        PriorFamily::Cam { alpha, beta } => {
            one - alpha / (one + alpha) * beta / (one + beta + beta)
        }
        PriorFamily::Hhdp { alpha, beta, beta0 } => {
            one - alpha * beta0 / ((alpha + one) * (beta + beta0 + one))
        }
    })
}

/// Distributional and observational co-clustering probabilities
/// P(G_j = G_j') and P(θ_ij = θ_i'j') for j ≠ j'.
pub fn cocluster_probs<T: Real>(family: &PriorFamily<T>) -> Result<(T, T)> {
    family.validate()?;
    let one = T::one();
    match *family {
        PriorFamily::Fisan { alpha, l, b } => {
            let l = T::from_usize_lossy(l);
            let dist = (one + alpha).recip();
            let obs = (l + alpha + l * (b + alpha * b)) / (l * (alpha + one) * (l * b + one));
            Ok((dist, obs))
        }
        PriorFamily::Fsan { a, k, l, b } => {
            let (k, l) = (T::from_usize_lossy(k), T::from_usize_lossy(l));
            let dist = (one + a) / (one + k * a);
            let obs = (a * (l + k - one) + l * (b + k * a * b + one)) / (l * (k * a + one) * (l * b + one));
            Ok((dist, obs))
        }
        other => Err(Error::Capability(format!(
            "observational co-clustering probability is only available for SAN priors, not {}",
            other.name()
        ))),
    }
}

/// Distributional co-clustering probability, available for every family.
pub fn distributional_cocluster_prob<T: Real>(family: &PriorFamily<T>) -> Result<T> {
    family.validate()?;
    Ok(family.distributional_tie_probability())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn reported_fsan_correlation() {
        let f = PriorFamily::Fsan { a: 0.05, k: 20, l: 25, b: 0.05 };
        let r: f64 = correlation(&f).unwrap();
        assert!((r - 0.5657).abs() < 5e-5, "{r}");
    }

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(correlation(&PriorFamily::Cam { alpha: 1.0, beta: 1.0 }).unwrap(), 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            correlation(&PriorFamily::Fisan { alpha: 1.0, l: 25, b: 0.05 }).unwrap(),
            1.0 - 24.0 / 52.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(correlation(&PriorFamily::Ndp { alpha: 3.0, beta: 0.1 }).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(
            correlation(&PriorFamily::Hhdp { alpha: 1.0, beta: 1.0, beta0: 1.0 }).unwrap(),
            1.0 - 1.0 / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn cocluster_examples() {
        let (d, o) = cocluster_probs(&PriorFamily::Fisan { alpha: 1.0, l: 25, b: 0.05 }).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(o, 28.5 / 112.5, epsilon = 1e-15);
        let (d, _) = cocluster_probs(&PriorFamily::Fsan { a: 0.05, k: 20, l: 25, b: 0.05 }).unwrap();
        assert_abs_diff_eq!(d, 0.525, epsilon = 1e-15);
        let (_, o) = cocluster_probs(&PriorFamily::Fisan { alpha: 2.7, l: 1, b: 0.3 }).unwrap();
        assert_abs_diff_eq!(o, 1.0, epsilon = 1e-15);
        let (_, o) = cocluster_probs(&PriorFamily::Fsan { a: 0.7, k: 4, l: 1, b: 0.3 }).unwrap();
        assert_abs_diff_eq!(o, 1.0, epsilon = 1e-15);
        assert!(matches!(
            cocluster_probs(&PriorFamily::Cam { alpha: 1.0, beta: 1.0 }),
            Err(Error::Capability(_))
        ));
        assert_abs_diff_eq!(
            distributional_cocluster_prob(&PriorFamily::Cam { alpha: 1.0, beta: 1.0 }).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn fsan_large_k_closed_form() {
        let (a, l, b) = (0.3f64, 10usize, 0.2);
        let k = 1_000_000usize;
        let r = correlation(&PriorFamily::Fsan { a, k, l, b }).unwrap();
        let lf = l as f64;
        let limit = 1.0 - (lf - 1.0) / (lf * (b + 1.0));
        let exact = 1.0 - (lf - 1.0) / (lf * (b + 1.0)) * a * (k as f64 - 1.0) / (k as f64 * a + 1.0);
        assert_abs_diff_eq!(r, exact, epsilon = 1e-14);
        assert!((r - limit).abs() < 1e-5);
    }

    #[test]
    fn generic_f32() {
        let r: f32 = correlation(&PriorFamily::Fsan { a: 0.05f32, k: 20, l: 25, b: 0.05 }).unwrap();
        assert!((r - 0.5657).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn correlations_in_unit_interval(
            alpha in 1e-3f64..50.0, beta in 1e-3f64..50.0, beta0 in 1e-3f64..50.0,
            a in 1e-3f64..50.0, b in 1e-3f64..50.0, k in 1usize..200, l in 1usize..200,
        ) {
            let fams = [
                PriorFamily::Fisan { alpha, l, b },
                PriorFamily::Fsan { a, k, l, b },
                PriorFamily::Ndp { alpha, beta },
                PriorFamily::Cam { alpha, beta },
                PriorFamily::Hhdp { alpha, beta, beta0 },
            ];
            for f in fams {
                let r = correlation(&f).unwrap();
                prop_assert!(r > 0.0 && r <= 1.0, "{:?} -> {}", f, r);
            }
        }

        #[test]
        fn san_correlation_monotone(
            alpha in 1e-2f64..20.0, a in 1e-2f64..20.0, b in 1e-2f64..20.0,
            k in 2usize..100, l in 2usize..100,
        ) {
            let fi = |b: f64, l: usize| correlation(&PriorFamily::Fisan { alpha, l, b }).unwrap();
            let f = |b: f64, l: usize| correlation(&PriorFamily::Fsan { a, k, l, b }).unwrap();
            prop_assert!(fi(b * 1.5, l) > fi(b, l));
            prop_assert!(fi(b, l + 1) < fi(b, l));
            prop_assert!(f(b * 1.5, l) > f(b, l));
            prop_assert!(f(b, l + 1) < f(b, l));
        }
    }
}
