use proptest::prelude::*;
use san_core::prior::{
    cocluster_probs, correlation, mc_correlation, peppf, peppf_total_mass, HyperPriorSpec, PriorFamily,
    TwoSampleCounts,
};
use san_core::RngStream;

fn positive() -> impl Strategy<Value = f64> {
    0.01f64..20.0
}

proptest! {
    #[test]
    fn correlation_is_a_proper_correlation(alpha in positive(), a in positive(), b in positive(), k in 1usize..50, l in 1usize..50) {
        for f in [PriorFamily::Fisan { alpha, l, b }, PriorFamily::Fsan { a, k, l, b }] {
            let r: f64 = correlation(&f).unwrap();
            prop_assert!(r > 0.0 && r <= 1.0, "{f:?}: {r}");
        }
    }

    #[test]
    fn more_observational_mass_spread_lowers_correlation(alpha in positive(), b in positive(), l in 2usize..50) {
        let base: f64 = correlation(&PriorFamily::Fisan { alpha, l, b }).unwrap();
        let more_atoms: f64 = correlation(&PriorFamily::Fisan { alpha, l: l + 1, b }).unwrap();
        let larger_b: f64 = correlation(&PriorFamily::Fisan { alpha, l, b: b * 1.5 }).unwrap();
        let larger_alpha: f64 = correlation(&PriorFamily::Fisan { alpha: alpha * 1.5, l, b }).unwrap();
        prop_assert!(more_atoms < base);
        prop_assert!(larger_b > base);
        prop_assert!(larger_alpha < base);
    }

    #[test]
    fn co_clustering_probabilities_are_ordered(alpha in positive(), a in positive(), b in positive(), k in 1usize..30, l in 1usize..30) {
        for f in [PriorFamily::Fisan { alpha, l, b }, PriorFamily::Fsan { a, k, l, b }] {
            let (dist, obs): (f64, f64) = cocluster_probs(&f).unwrap();
            prop_assert!(dist > 0.0 && dist <= 1.0);
            // sharing the distribution is one way of sharing an atom
            prop_assert!(obs >= dist * (1.0 + b) / (1.0 + l as f64 * b) - 1e-12 && obs <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn peppf_is_exchangeable_within_samples(alpha in positive(), b in positive(), l in 3usize..8) {
        let f = PriorFamily::Fisan { alpha, l, b };
        let x: f64 = peppf(&f, &TwoSampleCounts::new(vec![2, 1, 0], vec![1, 0, 2]).unwrap()).unwrap();
        let y: f64 = peppf(&f, &TwoSampleCounts::new(vec![1, 2, 0], vec![0, 1, 2]).unwrap()).unwrap();
        prop_assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn finite_distributional_prior_approaches_gem() {
    let (alpha, l, b) = (1.7, 10, 0.3);
    let target: f64 = correlation(&PriorFamily::Fisan { alpha, l, b }).unwrap();
    let gaps: Vec<f64> = [10usize, 100, 1000, 10_000]
        .iter()
        .map(|&k| {
            let r: f64 = correlation(&PriorFamily::Fsan { a: alpha / k as f64, k, l, b }).unwrap();
            (r - target).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-3);
}

#[test]
fn single_precision_agrees_with_double() {
    let r64: f64 = correlation(&PriorFamily::Fsan { a: 0.05, k: 20, l: 25, b: 0.05 }).unwrap();
    let r32: f32 = correlation(&PriorFamily::Fsan { a: 0.05f32, k: 20, l: 25, b: 0.05 }).unwrap();
    assert!((r64 - r32 as f64).abs() < 1e-6);
    let m64: f64 = peppf_total_mass(&PriorFamily::Fisan { alpha: 1.0, l: 3, b: 0.5 }, 2, 2).unwrap();
    let m32: f32 = peppf_total_mass(&PriorFamily::Fisan { alpha: 1.0f32, l: 3, b: 0.5 }, 2, 2).unwrap();
    assert!((m64 - 1.0).abs() < 1e-12 && (m32 - 1.0).abs() < 1e-5);
}

#[test]
fn simulation_recovers_closed_form_at_fixed_parameters() {
    for f in [
        PriorFamily::Fisan { alpha: 1.0, l: 5, b: 0.5 },
        PriorFamily::Fsan { a: 0.5, k: 4, l: 5, b: 0.5 },
        PriorFamily::Cam { alpha: 1.0, beta: 2.0 },
    ] {
        let exact: f64 = correlation(&f).unwrap();
        let (est, se) = mc_correlation(&f, &HyperPriorSpec::default(), 0.3, 20_000, &RngStream::new(3, 0)).unwrap();
        assert!((est - exact).abs() < 4.0 * se + 1e-3, "{}: {est} ± {se} vs {exact}", f.name());
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(correlation(&PriorFamily::Fisan { alpha: 0.0, l: 5, b: 0.5 }).is_err());
    assert!(correlation(&PriorFamily::Fsan { a: 1.0, k: 0, l: 5, b: 0.5 }).is_err());
    assert!(cocluster_probs(&PriorFamily::Ndp { alpha: 1.0, beta: 1.0 }).is_err());
    assert!(peppf_total_mass(&PriorFamily::Fisan { alpha: f64::NAN, l: 2, b: 1.0 }, 1, 1).is_err());
}
