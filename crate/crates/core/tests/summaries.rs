use proptest::prelude::*;
use san_core::cavi::{fit, FitOptions};
use san_core::simulate::univariate_benchmark;
use san_core::summaries::{
    ari, assignment, data_grid, density_true, density_vi, kl_on_grid, linear_grid, mcmc_partition, psm_from_draws,
    vi_partition, Level,
};
use san_core::{FisanConfig, ModelConfig, RngStream};

fn labels(max: usize, len: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..max, len)
}

proptest! {
    #[test]
    fn ari_is_symmetric_and_label_free((p, q) in (2usize..30).prop_flat_map(|n| (labels(5, n), labels(5, n))), shift in 1usize..7) {
        let pq = ari(&p, &q).unwrap();
        let qp = ari(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() < 1e-12);
        prop_assert!(pq <= 1.0 + 1e-12);
        let renamed: Vec<usize> = p.iter().map(|&x| (x + shift) * 3).collect();
        prop_assert!((ari(&renamed, &q).unwrap() - pq).abs() < 1e-12);
        prop_assert_eq!(ari(&p, &renamed).unwrap(), 1.0);
    }

    #[test]
    fn greedy_partition_recovers_a_constant_chain(p in labels(4, 12)) {
        let draws = vec![p.clone(); 5];
        let psm = psm_from_draws(draws.iter().map(|d| d.as_slice())).unwrap();
        let est = mcmc_partition(&psm, Level::Observational);
        prop_assert_eq!(ari(&est.labels, &p).unwrap(), 1.0);
    }

    #[test]
    fn assignment_beats_every_swap(cost in proptest::collection::vec(0.0f64..10.0, 16)) {
        let cols = assignment(4, &cost);
        let total = |c: &[usize]| c.iter().enumerate().map(|(r, &k)| cost[r * 4 + k]).sum::<f64>();
        let best = total(&cols);
        for a in 0..4 {
            for b in a + 1..4 {
                let mut alt = cols.clone();
                alt.swap(a, b);
                prop_assert!(best <= total(&alt) + 1e-12);
            }
        }
    }
}

#[test]
fn fitted_summaries_are_consistent() {
    let (data, truth) = univariate_benchmark(40, &mut RngStream::new(21, 0)).unwrap();
    let config = ModelConfig::Fisan(FisanConfig::default_for_dim(1));
    let res = fit(&data, &config, &FitOptions { restarts: 5, ..Default::default() }, &RngStream::new(1, 0)).unwrap();
    let (s, m) = vi_partition(&res.best);
    assert_eq!(s.len(), data.n_groups());
    assert_eq!(m.len(), data.n_obs());
    assert!(ari(&s.labels, &truth.distributional).unwrap() > 0.5);

    let grid = data_grid(&data, 5.0, 800).unwrap();
    let wide = linear_grid(grid[0][0] - 10.0, grid[799][0] + 10.0, 4000);
    for j in 0..data.n_groups() {
        let est = density_vi(&res.best, &wide, j).unwrap();
        let mass = est.mass().unwrap();
        assert!((0.95..=1.0 + 1e-6).contains(&mass), "group {j}: {mass}");
        let t = density_true(&truth, &grid, j).unwrap();
        let f = density_vi(&res.best, &grid, j).unwrap();
        let kl = kl_on_grid(&t, &f).unwrap();
        assert!(kl >= -1e-3 && kl < 0.5, "group {j}: {kl}");
        assert!(kl_on_grid(&t, &t).unwrap().abs() < 1e-12);
    }
}
