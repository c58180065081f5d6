//! Partially exchangeable partition probability functions for two samples.
//!
//! Every quantity is a log probability of one specific set partition of the
//! pooled items, with per-sample block frequencies given by
//! [`TwoSampleCounts`].

use std::collections::HashMap;

use super::family::{PriorFamily, TwoSampleCounts};
use crate::error::{Error, Result};
use crate::math::special::{ln_gamma_unchecked, log_sum_exp};
use crate::math::Real;

/// Largest pooled sample handled by [`peppf_total_mass`].
pub const MAX_ENUMERATION_ITEMS: usize = 8;
/// Largest L handled by [`peppf_total_mass`] for SAN families.
pub const MAX_ENUMERATION_ATOMS: usize = 6;

/// ln Γ(x + n) - ln Γ(x), exact as a log rising factorial for moderate n.
fn ln_rising<T: Real>(x: T, n: usize) -> T {
    if n <= 64 {
        (0..n).map(|m| (x + T::from_usize_lossy(m)).ln()).sum()
    } else {
        ln_gamma_unchecked(x + T::from_usize_lossy(n)) - ln_gamma_unchecked(x)
    }
}

/// ln L!/(L - s)!
fn ln_falling<T: Real>(l: usize, s: usize) -> T {
    (0..s).map(|m| T::from_usize_lossy(l - m).ln()).sum()
}

fn check_positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

/// EPPF of a symmetric Dirichlet_L(b) sample with block frequencies `counts`
/// (zero entries ignored).
pub fn dirichlet_eppf<T: Real>(counts: &[usize], l: usize, b: T) -> Result<T> {
    check_positive("b", b)?;
    let s = counts.iter().filter(|&&n| n > 0).count();
    if s > l {
        return Err(Error::InfeasiblePartition(format!(
            "{s} occupied blocks exceed the {l} available atoms"
        )));
    }
    let n: usize = counts.iter().sum();
    let lb = T::from_usize_lossy(l) * b;
    let mut out = ln_falling::<T>(l, s) - ln_rising(lb, n);
    for &c in counts.iter().filter(|&&c| c > 0) {
        out = out + ln_rising(b, c);
    }
    Ok(out)
}

/// Ewens EPPF of a DP(β) sample: β^s Γ(β)/Γ(β + N) Π Γ(n_l).
pub fn dp_eppf<T: Real>(counts: &[usize], beta: T) -> Result<T> {
    check_positive("beta", beta)?;
    let n: usize = counts.iter().sum();
    let mut out = -ln_rising(beta, n);
    for &c in counts.iter().filter(|&&c| c > 0) {
        out = out + beta.ln() + ln_rising(T::one(), c - 1);
    }
    Ok(out)
}

/// ln of the shared-atom correction (L-s0-s1)!(L-s0-s2)! / (L!(L-s)!).
pub fn correction_constant<T: Real>(s0: usize, s1: usize, s2: usize, l: usize) -> Result<T> {
    if s0 + s1 + s2 > l {
        return Err(Error::InfeasiblePartition(format!(
            "s0 + s1 + s2 = {} exceeds L = {l}",
            s0 + s1 + s2
        )));
    }
    // (L-s0-s1)!/L! · (L-s0-s2)!/(L-s0-s1-s2)!
    Ok(ln_falling::<T>(l - s0 - s2, s1) - ln_falling::<T>(l, s0 + s1))
}

/// The two mixture components of a pEPPF, each already multiplied by its
/// mixing weight, in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeppfTerms<T> {
    /// Both samples in one distributional cluster (pooled EPPF).
    pub exchangeable: T,
    /// Samples in different distributional clusters.
    pub independent: T,
}

impl<T: Real> PeppfTerms<T> {
    pub fn total(&self) -> T {
        log_sum_exp(&[self.exchangeable, self.independent])
    }
}

pub fn peppf_terms<T: Real>(family: &PriorFamily<T>, counts: &TwoSampleCounts) -> Result<PeppfTerms<T>> {
    family.validate()?;
    let one = T::one();
    let pooled = counts.pooled();
    match *family {
        PriorFamily::Fisan { l, b, .. } | PriorFamily::Fsan { l, b, .. } => {
            let p_same = family.distributional_tie_probability();
            let p_diff = one - p_same;
            let exchangeable = p_same.ln() + dirichlet_eppf(&pooled, l, b)?;
            let independent = if p_diff > T::zero() {
                p_diff.ln()
                    + correction_constant::<T>(counts.s0(), counts.s1(), counts.s2(), l)?
                    + dirichlet_eppf(counts.n1(), l, b)?
                    + dirichlet_eppf(counts.n2(), l, b)?
            } else {
                T::neg_infinity()
            };
            Ok(PeppfTerms { exchangeable, independent })
        }
        PriorFamily::Ndp { alpha, beta } => {
            let exchangeable = -(one + alpha).ln() + dp_eppf(&pooled, beta)?;
            let independent = if counts.s0() == 0 {
                (alpha / (one + alpha)).ln() + dp_eppf(counts.n1(), beta)? + dp_eppf(counts.n2(), beta)?
            } else {
                T::neg_infinity()
            };
            Ok(PeppfTerms { exchangeable, independent })
        }
        other => Err(Error::Capability(format!(
            "partition probability functions are not implemented for {}",
            other.name()
        ))),
    }
}

/// Log probability of one two-sample partition with the given frequencies.
pub fn peppf<T: Real>(family: &PriorFamily<T>, counts: &TwoSampleCounts) -> Result<T> {
    Ok(peppf_terms(family, counts)?.total())
}

/// Visits every set partition of `n` items as a restricted growth string with
/// at most `max_blocks` blocks.
pub fn for_each_set_partition(n: usize, max_blocks: usize, mut visit: impl FnMut(&[usize], usize)) {
    if n == 0 {
        visit(&[], 0);
        return;
    }
    let mut labels = vec![0usize; n];
    fn rec(pos: usize, blocks: usize, labels: &mut [usize], max_blocks: usize, visit: &mut dyn FnMut(&[usize], usize)) {
        if pos == labels.len() {
            visit(labels, blocks);
            return;
        }
        let upper = (blocks + 1).min(max_blocks);
        for b in 0..upper {
            labels[pos] = b;
            rec(pos + 1, blocks.max(b + 1), labels, max_blocks, visit);
        }
    }
    labels[0] = 0;
    rec(1, 1, &mut labels, max_blocks.max(1), &mut visit);
}

/// Frequencies induced by a restricted growth string over n1 + n2 items.
pub fn counts_from_labels(labels: &[usize], n1: usize, blocks: usize) -> TwoSampleCounts {
    let mut c1 = vec![0usize; blocks];
    let mut c2 = vec![0usize; blocks];
    for (i, &b) in labels.iter().enumerate() {
        if i < n1 {
            c1[b] += 1;
        } else {
            c2[b] += 1;
        }
    }
    TwoSampleCounts::new(c1, c2).expect("equal lengths")
}

/// Sum of the pEPPF over every set partition of N1 + N2 items.
pub fn peppf_total_mass<T: Real>(family: &PriorFamily<T>, n1: usize, n2: usize) -> Result<T> {
    family.validate()?;
    if n1 + n2 > MAX_ENUMERATION_ITEMS {
        return Err(Error::Resource(format!(
            "N1 + N2 = {} exceeds the enumeration limit {MAX_ENUMERATION_ITEMS}",
            n1 + n2
        )));
    }
    let max_blocks = match *family {
        PriorFamily::Fisan { l, .. } | PriorFamily::Fsan { l, .. } => {
            if l > MAX_ENUMERATION_ATOMS {
                return Err(Error::Resource(format!(
                    "L = {l} exceeds the enumeration limit {MAX_ENUMERATION_ATOMS}"
                )));
            }
            l
        }
        PriorFamily::Ndp { .. } => n1 + n2,
        other => {
            return Err(Error::Capability(format!(
                "partition probability functions are not implemented for {}",
                other.name()
            )))
        }
    };
    // the pEPPF depends on the partition only through its multiset of
    // (n1, n2) block frequencies
    let mut memo: HashMap<Vec<(usize, usize)>, T> = HashMap::new();
    let mut total = T::zero();
    let mut failure = None;
    for_each_set_partition(n1 + n2, max_blocks, |labels, blocks| {
        if failure.is_some() {
            return;
        }
        let counts = counts_from_labels(labels, n1, blocks);
        let mut key: Vec<(usize, usize)> = counts.n1().iter().copied().zip(counts.n2().iter().copied()).collect();
        key.sort_unstable();
        let p = match memo.get(&key) {
            Some(p) => *p,
            None => match peppf(family, &counts) {
                Ok(lp) => {
                    let p = lp.exp();
                    memo.insert(key, p);
                    p
                }
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            },
        };
        total = total + p;
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}
