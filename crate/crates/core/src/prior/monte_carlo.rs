//! Simulation-based prior summaries, used both on their own (random
//! concentration parameters) and as oracles for the closed forms.

use rand::Rng;
use rayon::prelude::*;

use super::family::{HyperPrior, HyperPriorSpec, PriorFamily, TwoSampleCounts};
use crate::error::{Error, Result};
use crate::math::sample::{beta, categorical_log, gamma, log_dirichlet};
use crate::math::RngStream;

/// Residual stick mass below which a stick-breaking draw is truncated.
pub const STICK_TOLERANCE: f64 = 1e-8;
/// Hard cap on the number of sticks in one truncated draw.
pub const MAX_STICKS: usize = 1 << 20;

const CHUNK: usize = 2_000;

/// Options for [`mc_correlation_with`].
#[derive(Debug, Clone, Copy)]
pub struct McCorrelationOptions {
    /// H(A), the base-measure probability of the test set.
    pub h: f64,
    /// Number of hyperparameter draws.
    pub draws: usize,
    /// Simulated (G_j(A), G_j'(A)) pairs per hyperparameter draw.
    pub pairs_per_draw: usize,
}

impl Default for McCorrelationOptions {
    fn default() -> Self {
        Self {
            h: 0.3,
            draws: 100_000,
            pairs_per_draw: 100,
        }
    }
}

/// Monte Carlo estimate of the correlation Corr(G_j(A), G_j'(A)) averaged
/// over the hyperprior, with its standard error.
pub fn mc_correlation(
    family: &PriorFamily<f64>,
    hyperpriors: &HyperPriorSpec,
    h: f64,
    draws: usize,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    mc_correlation_with(
        family,
        hyperpriors,
        McCorrelationOptions {
            h,
            draws,
            ..Default::default()
        },
        rng,
    )
}

pub fn mc_correlation_with(
    family: &PriorFamily<f64>,
    hyperpriors: &HyperPriorSpec,
    opts: McCorrelationOptions,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    family.validate()?;
    hyperpriors.validate()?;
    if !(opts.h > 0.0 && opts.h < 1.0) {
        return Err(Error::Config(format!("set probability must lie in (0, 1), got {}", opts.h)));
    }
    if opts.draws < 2 || opts.pairs_per_draw < 2 {
        return Err(Error::Config("need at least two draws and two pairs per draw".into()));
    }
    let chunks = opts.draws.div_ceil(CHUNK);
    let partial: Vec<Result<(f64, f64, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng.child(c as u64);
            let n = CHUNK.min(opts.draws - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let fam = draw_hyperparameters(family, hyperpriors, &mut r)?;
                let est = conditional_correlation(&fam, opts.h, opts.pairs_per_draw, &mut r)?;
                s += est;
                s2 += est * est;
            }
            Ok((s, s2, n))
        })
        .collect();
    let (mut s, mut s2, mut n) = (0.0, 0.0, 0usize);
    for p in partial {
        let (a, b, c) = p?;
        s += a;
        s2 += b;
        n += c;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 - nf * mean * mean) / (nf - 1.0);
    Ok((mean, (var.max(0.0) / nf).sqrt()))
}

fn draw_param(current: f64, hp: Option<HyperPrior>, rng: &mut RngStream) -> Result<f64> {
    match hp {
        None => Ok(current),
        Some(HyperPrior::Fixed { value }) => Ok(value),
        Some(HyperPrior::Gamma { shape, rate }) => {
            // guard against draws that underflow to zero
            Ok(gamma(shape, rate, rng)?.max(f64::MIN_POSITIVE))
        }
    }
}

/// Family with any hyperprior-governed parameters replaced by a draw.
pub fn draw_hyperparameters(
    family: &PriorFamily<f64>,
    hp: &HyperPriorSpec,
    rng: &mut RngStream,
) -> Result<PriorFamily<f64>> {
    Ok(match *family {
        PriorFamily::Fisan { alpha, l, b } => PriorFamily::Fisan {
            alpha: draw_param(alpha, hp.alpha, rng)?,
            l,
            b: draw_param(b, hp.b, rng)?,
        },
        PriorFamily::Fsan { a, k, l, b } => PriorFamily::Fsan {
            a: draw_param(a, hp.a, rng)?,
            k,
            l,
            b: draw_param(b, hp.b, rng)?,
        },
        PriorFamily::Ndp { alpha, beta } => PriorFamily::Ndp {
            alpha: draw_param(alpha, hp.alpha, rng)?,
            beta: draw_param(beta, hp.beta, rng)?,
        },
        PriorFamily::Cam { alpha, beta } => PriorFamily::Cam {
            alpha: draw_param(alpha, hp.alpha, rng)?,
            beta: draw_param(beta, hp.beta, rng)?,
        },
        PriorFamily::Hhdp { alpha, beta, beta0 } => PriorFamily::Hhdp {
            alpha: draw_param(alpha, hp.alpha, rng)?,
            beta: draw_param(beta, hp.beta, rng)?,
            beta0: draw_param(beta0, hp.beta0, rng)?,
        },
    })
}

/// Beta draw that tolerates degenerate parameters (a point mass at 0 or 1).
fn beta_or_point(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if a <= 0.0 {
        Ok(0.0)
    } else if b <= 0.0 {
        Ok(1.0)
    } else {
        beta(a, b, rng)
    }
}

/// Simulates one pair (G_j(A), G_j'(A)).
pub fn simulate_measure_pair(family: &PriorFamily<f64>, h: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
    // marginally over the distributional weights, the second group picks the
    // first group's distributional atom with the tie probability
    let same = rng.random::<f64>() < family.distributional_tie_probability();
    match *family {
        PriorFamily::Fisan { l, b, .. } | PriorFamily::Fsan { l, b, .. } => {
            // shared atoms: m of the L atoms fall in A; the Dirichlet mass on
            // them is Beta(m b, (L - m) b)
            let m = (0..l).filter(|_| rng.random::<f64>() < h).count() as f64;
            let lf = l as f64;
            let g1 = beta_or_point(m * b, (lf - m) * b, rng)?;
            let g2 = if same { g1 } else { beta_or_point(m * b, (lf - m) * b, rng)? };
            Ok((g1, g2))
        }
        PriorFamily::Ndp { beta: conc, .. } => {
            // distinct distributional atoms have independent atom sets
            let g1 = beta(conc * h, conc * (1.0 - h), rng)?;
            let g2 = if same { g1 } else { beta(conc * h, conc * (1.0 - h), rng)? };
            Ok((g1, g2))
        }
        PriorFamily::Hhdp { beta: conc, beta0, .. } => {
            let g0 = beta(beta0 * h, beta0 * (1.0 - h), rng)?;
            let g1 = beta_or_point(conc * g0, conc * (1.0 - g0), rng)?;
            let g2 = if same { g1 } else { beta_or_point(conc * g0, conc * (1.0 - g0), rng)? };
            Ok((g1, g2))
        }
        PriorFamily::Cam { beta: conc, .. } => cam_pair(conc, h, same, rng),
    }
}

/// Common atoms: both measures put GEM(β) weights on one ordered atom
/// sequence. Truncated once the residual stick mass of both draws is below
/// [`STICK_TOLERANCE`].
fn cam_pair(conc: f64, h: f64, same: bool, rng: &mut RngStream) -> Result<(f64, f64)> {
    let inv = 1.0 / conc;
    let (mut g1, mut g2) = (0.0, 0.0);
    let (mut rest1, mut rest2) = (1.0f64, if same { 0.0 } else { 1.0f64 });
    let mut sticks = 0usize;
    while rest1.max(rest2) >= STICK_TOLERANCE {
        if sticks == MAX_STICKS {
            return Err(Error::Truncation {
                residual: rest1.max(rest2),
                sticks,
            });
        }
        sticks += 1;
        let in_set = rng.random::<f64>() < h;
        // Beta(1, β) by inversion
        let v1 = 1.0 - rng.random::<f64>().powf(inv);
        let w1 = rest1 * v1;
        rest1 -= w1;
        let w2 = if same {
            0.0
        } else {
            let v2 = 1.0 - rng.random::<f64>().powf(inv);
            let w = rest2 * v2;
            rest2 -= w;
            w
        };
        if in_set {
            g1 += w1;
            g2 += w2;
        }
    }
    if same {
        g2 = g1;
    }
    Ok((g1, g2))
}

/// Correlation of one hyperparameter draw from `pairs` simulated pairs,
/// centred at the known mean h, with a jackknife bias correction of the
/// ratio estimator.
fn conditional_correlation(family: &PriorFamily<f64>, h: f64, pairs: usize, rng: &mut RngStream) -> Result<f64> {
    let mut cross = Vec::with_capacity(pairs);
    let mut var = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let (g1, g2) = simulate_measure_pair(family, h, rng)?;
        let (x, y) = (g1 - h, g2 - h);
        cross.push(x * y);
        var.push(0.5 * (x * x + y * y));
    }
    let sc: f64 = cross.iter().sum();
    let sv: f64 = var.iter().sum();
    let full = sc / sv;
    let m = pairs as f64;
    let loo_mean = cross
        .iter()
        .zip(&var)
        .map(|(c, v)| (sc - c) / (sv - v))
        .sum::<f64>()
        / m;
    Ok(m * full - (m - 1.0) * loo_mean)
}

/// Restricted growth string of a label sequence (first-appearance order).
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&x| match map.iter().find(|(k, _)| *k == x) {
            Some(&(_, v)) => v,
            None => {
                let v = map.len();
                map.push((x, v));
                v
            }
        })
        .collect()
}

/// The set partition queried by `counts`, items of sample 1 first.
pub fn canonical_partition(counts: &TwoSampleCounts) -> Vec<usize> {
    let mut labels = Vec::with_capacity(counts.total1() + counts.total2());
    for (b, &c) in counts.n1().iter().enumerate() {
        labels.extend(std::iter::repeat_n(b, c));
    }
    for (b, &c) in counts.n2().iter().enumerate() {
        labels.extend(std::iter::repeat_n(b, c));
    }
    canonical_labels(&labels)
}

/// Draws observational labels for N1 + N2 items by forward simulation.
fn simulate_two_sample_labels(
    family: &PriorFamily<f64>,
    n1: usize,
    n2: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let same = rng.random::<f64>() < family.distributional_tie_probability();
    let mut labels = Vec::with_capacity(n1 + n2);
    match *family {
        PriorFamily::Fisan { l, b, .. } | PriorFamily::Fsan { l, b, .. } => {
            let w1 = log_dirichlet(&vec![b; l], rng)?;
            let w2 = if same { w1.clone() } else { log_dirichlet(&vec![b; l], rng)? };
            for _ in 0..n1 {
                labels.push(categorical_log(&w1, rng)?);
            }
            for _ in 0..n2 {
                labels.push(categorical_log(&w2, rng)?);
            }
        }
        PriorFamily::Ndp { beta: conc, .. } => {
            // Pólya urn per distributional atom; distinct atoms never share
            // observational values
            let mut urn = |labels: &mut Vec<usize>, n: usize, offset: usize, start_sizes: Vec<usize>| {
                let mut sizes = start_sizes;
                for _ in 0..n {
                    let total: usize = sizes.iter().sum();
                    let u = rng.random::<f64>() * (total as f64 + conc);
                    let mut acc = 0.0;
                    let mut chosen = sizes.len();
                    for (i, &s) in sizes.iter().enumerate() {
                        acc += s as f64;
                        if u < acc {
                            chosen = i;
                            break;
                        }
                    }
                    if chosen == sizes.len() {
                        sizes.push(0);
                    }
                    sizes[chosen] += 1;
                    labels.push(offset + chosen);
                }
                sizes
            };
            if same {
                urn(&mut labels, n1 + n2, 0, Vec::new());
            } else {
                urn(&mut labels, n1, 0, Vec::new());
                urn(&mut labels, n2, 1 << 20, Vec::new());
            }
        }
        other => {
            return Err(Error::Capability(format!(
                "forward partition simulation is not implemented for {}",
                other.name()
            )))
        }
    }
    Ok(labels)
}

/// Frequency with which forward simulation produces the queried partition,
/// with its binomial standard error.
pub fn generative_peppf_frequency(
    family: &PriorFamily<f64>,
    counts: &TwoSampleCounts,
    reps: usize,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    family.validate()?;
    let target = canonical_partition(counts);
    let (n1, n2) = (counts.total1(), counts.total2());
    let chunks = reps.div_ceil(CHUNK * 10);
    let hits: Vec<Result<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng.child(c as u64);
            let n = (CHUNK * 10).min(reps - c * CHUNK * 10);
            let mut hits = 0usize;
            for _ in 0..n {
                let labels = simulate_two_sample_labels(family, n1, n2, &mut r)?;
                if canonical_labels(&labels) == target {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    let mut total = 0usize;
    for h in hits {
        total += h?;
    }
    let p = total as f64 / reps as f64;
    Ok((p, (p * (1.0 - p) / reps as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::correlation::{cocluster_probs, correlation};
    use crate::prior::peppf::peppf;

    #[test]
    fn ndp_fixed_matches_closed_form() {
        let f = PriorFamily::Ndp { alpha: 1.0, beta: 1.0 };
        let (est, se) = mc_correlation_with(
            &f,
            &HyperPriorSpec::default(),
            McCorrelationOptions { h: 0.3, draws: 20_000, pairs_per_draw: 100 },
            &RngStream::new(1, 0),
        )
        .unwrap();
        assert!((est - 0.5).abs() < 3.0 * se.max(1e-4), "{est} ± {se}");
    }

    #[test]
    fn fixed_parameters_match_closed_forms_at_several_h() {
        let fams = [
            PriorFamily::Fisan { alpha: 1.0, l: 10, b: 0.5 },
            PriorFamily::Fsan { a: 0.5, k: 5, l: 8, b: 0.3 },
            PriorFamily::Cam { alpha: 1.0, beta: 1.0 },
            PriorFamily::Hhdp { alpha: 1.0, beta: 1.0, beta0: 2.0 },
        ];
        for (i, f) in fams.iter().enumerate() {
            for h in [0.1, 0.5] {
                let (est, se) = mc_correlation_with(
                    f,
                    &HyperPriorSpec::default(),
                    McCorrelationOptions { h, draws: 10_000, pairs_per_draw: 100 },
                    &RngStream::new(10 + i as u64, 0),
                )
                .unwrap();
                let exact = correlation(f).unwrap();
                assert!((est - exact).abs() < 4.0 * se + 2e-3, "{f:?} h={h}: {est} ± {se} vs {exact}");
            }
        }
    }

    #[test]
    fn generative_frequency_single_pair() {
        let f = PriorFamily::Fisan { alpha: 1.0, l: 25, b: 0.05 };
        let shared = TwoSampleCounts::new(vec![1], vec![1]).unwrap();
        let (p, se) = generative_peppf_frequency(&f, &shared, 100_000, &RngStream::new(5, 0)).unwrap();
        let exact = peppf(&f, &shared).unwrap().exp();
        assert!((p - exact).abs() < 3.0 * se, "{p} ± {se} vs {exact}");

        let g = PriorFamily::Fsan { a: 0.05, k: 20, l: 25, b: 0.05 };
        let distinct = TwoSampleCounts::new(vec![1, 0], vec![0, 1]).unwrap();
        let (p, se) = generative_peppf_frequency(&g, &distinct, 100_000, &RngStream::new(6, 0)).unwrap();
        let (_, obs) = cocluster_probs(&g).unwrap();
        assert!((p - (1.0 - obs)).abs() < 3.0 * se);
    }

    #[test]
    fn generative_frequency_degenerate_single_atom() {
        let f = PriorFamily::Fisan { alpha: 1.0, l: 1, b: 0.5 };
        let shared = TwoSampleCounts::new(vec![1], vec![1]).unwrap();
        let (p, _) = generative_peppf_frequency(&f, &shared, 10_000, &RngStream::new(7, 0)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canonical_labels(&[5, 5, 2, 9, 2]), vec![0, 0, 1, 2, 1]);
        let c = TwoSampleCounts::new(vec![2, 0, 1], vec![1, 1, 0]).unwrap();
        assert_eq!(canonical_partition(&c), vec![0, 0, 1, 0, 2]);
    }
}
