use san_core::cavi::{fit, FitOptions, FittedState};
use san_core::io::{filter_groups, load_grouped_csv, probit_preprocess, write_grouped_csv};
use san_core::simulate::multivariate_benchmark;
use san_core::summaries::{ari, vi_partition};
use san_core::{ModelConfig, FisanConfig, RngStream};

#[test]
fn simulated_data_survive_disk_and_refit_identically() {
    let (data, truth) = multivariate_benchmark(2, 30, &mut RngStream::new(4, 0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_grouped_csv(&csv, &data).unwrap();
    let back = load_grouped_csv(&csv).unwrap();
    assert_eq!(back.values(), data.values());
    assert_eq!(back.group_sizes(), data.group_sizes());

    let config = ModelConfig::Fisan(FisanConfig::default_for_dim(2));
    let opts = FitOptions { restarts: 4, ..Default::default() };
    let a = fit(&data, &config, &opts, &RngStream::new(1, 0)).unwrap();
    let b = fit(&back, &config, &opts, &RngStream::new(1, 0)).unwrap();
    assert_eq!(a.best, b.best);
    assert!(ari(&vi_partition(&a.best).0.labels, &truth.distributional).unwrap() > 0.5);

    let state_path = dir.path().join("state.json");
    let saved = FittedState::from_fit(config, &a);
    saved.save(&state_path).unwrap();
    assert_eq!(FittedState::load(&state_path).unwrap(), saved);
}

#[test]
fn preprocessing_keeps_groups_and_order() {
    let (data, _) = multivariate_benchmark(3, 20, &mut RngStream::new(6, 0)).unwrap();
    let z = probit_preprocess(&data, None).unwrap();
    assert_eq!(z.group_sizes(), data.group_sizes());
    // the transform is monotone within each column
    for c in 0..3 {
        let (mut x, mut y): (Vec<f64>, Vec<f64>) =
            (0..data.n_obs()).map(|n| (data.obs(n)[c], z.obs(n)[c])).unzip();
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&i, &k| x[i].total_cmp(&x[k]));
        x = order.iter().map(|&i| x[i]).collect();
        y = order.iter().map(|&i| y[i]).collect();
        assert!(x.windows(2).zip(y.windows(2)).all(|(a, b)| a[0] == a[1] || b[0] <= b[1]));
    }
    let kept = filter_groups(&data, 20, 20).unwrap();
    assert_eq!(kept.n_groups(), data.n_groups());
    assert!(filter_groups(&data, 21, 100).is_err());
}
