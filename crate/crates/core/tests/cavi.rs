use san_core::cavi::{elbo, fit, fit_single, init_state, iterate, FitOptions, InitStrategy, VariationalState};
use san_core::prior::HyperPrior;
use san_core::simulate::univariate_benchmark;
use san_core::{FisanConfig, FsanConfig, GroupedDataset, ModelConfig, NormalWishart, RngStream};
use statrs::function::gamma::{digamma, ln_gamma};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn toy() -> GroupedDataset {
    GroupedDataset::new(vec![vec![vec![-0.7], vec![1.3]]]).unwrap()
}

fn fisan(alpha: HyperPrior) -> ModelConfig {
    ModelConfig::Fisan(FisanConfig {
        l: 2,
        t: 2,
        b: 0.7,
        alpha,
        kernel: NormalWishart::from_normal_inverse_gamma(0.2, 0.5, 2.5, 1.5).unwrap(),
    })
}

fn fsan() -> ModelConfig {
    ModelConfig::Fsan(FsanConfig {
        k: 2,
        l: 2,
        a: 0.4,
        b: 0.7,
        kernel: NormalWishart::from_normal_inverse_gamma(0.2, 0.5, 2.5, 1.5).unwrap(),
    })
}

fn ln_beta(p: &[f64]) -> f64 {
    p.iter().map(|&x| ln_gamma(x)).sum::<f64>() - ln_gamma(p.iter().sum())
}

fn e_log_dirichlet(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|&x| digamma(x) - digamma(s)).collect()
}

fn dirichlet_entropy(p: &[f64]) -> f64 {
    let s: f64 = p.iter().sum();
    ln_beta(p) + (s - p.len() as f64) * digamma(s) - p.iter().map(|&x| (x - 1.0) * digamma(x)).sum::<f64>()
}

fn gamma_entropy(shape: f64, rate: f64) -> f64 {
    shape - rate.ln() + ln_gamma(shape) + (1.0 - shape) * digamma(shape)
}

// (mean, kappa, shape, rate) of a Normal-Gamma factor
fn normal_gamma(k: &NormalWishart) -> (f64, f64, f64, f64) {
    (k.mean[0], k.kappa, 0.5 * k.dof, 0.5 / k.scale.as_slice()[0])
}

/// ELBO of the toy problem written out term by term for a single group,
/// two components and a univariate Normal-Gamma kernel.
fn oracle(state: &VariationalState, data: &GroupedDataset, config: &ModelConfig) -> f64 {
    let (m0, k0, a0, b0) = normal_gamma(config.kernel());
    let b = config.b();
    let mut total = 0.0;

    let elog_pi = match config {
        ModelConfig::Fisan(c) => {
            let (va, vb) = (state.stick_a[0], state.stick_b[0]);
            let (e_alpha, e_log_alpha) = match (c.alpha, state.alpha) {
                (HyperPrior::Fixed { value }, _) => (value, value.ln()),
                (HyperPrior::Gamma { shape, rate }, Some((s1, s2))) => {
                    let e = s1 / s2;
                    let el = digamma(s1) - s2.ln();
                    total += shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * el - rate * e;
                    total += gamma_entropy(s1, s2);
                    (e, el)
                }
                _ => unreachable!(),
            };
            let e_log_v = digamma(va) - digamma(va + vb);
            let e_log_1mv = digamma(vb) - digamma(va + vb);
            total += e_log_alpha + (e_alpha - 1.0) * e_log_1mv;
            total += dirichlet_entropy(&[va, vb]);
            vec![e_log_v, e_log_1mv]
        }
        ModelConfig::Fsan(c) => {
            let q = &state.dist_dirichlet;
            let e = e_log_dirichlet(q);
            total += -ln_beta(&[c.a, c.a]) + (c.a - 1.0) * e.iter().sum::<f64>();
            total += dirichlet_entropy(q);
            e
        }
    };

    let rho = state.rho_row(0);
    let elog_omega: Vec<Vec<f64>> = (0..2).map(|k| e_log_dirichlet(state.p_row(k))).collect();
    for k in 0..2 {
        total += rho[k] * elog_pi[k];
        total += -ln_beta(&[b, b]) + (b - 1.0) * elog_omega[k].iter().sum::<f64>();
        total += dirichlet_entropy(state.p_row(k));
        if rho[k] > 0.0 {
            total -= rho[k] * rho[k].ln();
        }
    }

    let kern: Vec<(f64, f64, f64, f64, f64, f64)> = state
        .kernels
        .iter()
        .map(|k| {
            let (m, kap, a, r) = normal_gamma(k);
            (m, kap, a, r, a / r, digamma(a) - r.ln())
        })
        .collect();
    for n in 0..2 {
        let y = data.obs(n)[0];
        for (l, &(m, kap, _, _, e_lam, e_log_lam)) in kern.iter().enumerate() {
            let x = state.xi_row(n)[l];
            let e_lik = 0.5 * e_log_lam - 0.5 * LN_2PI - 0.5 * (1.0 / kap + e_lam * (y - m) * (y - m));
            let e_label: f64 = (0..2).map(|k| rho[k] * elog_omega[k][l]).sum();
            total += x * (e_lik + e_label);
            if x > 0.0 {
                total -= x * x.ln();
            }
        }
    }
    for &(m, kap, a, r, e_lam, e_log_lam) in &kern {
        total += 0.5 * k0.ln() + 0.5 * e_log_lam - 0.5 * LN_2PI - 0.5 * k0 * (1.0 / kap + e_lam * (m - m0) * (m - m0));
        total += a0 * b0.ln() - ln_gamma(a0) + (a0 - 1.0) * e_log_lam - b0 * e_lam;
        total += gamma_entropy(a, r) + 0.5 * (1.0 + LN_2PI - kap.ln() - e_log_lam);
    }
    total
}

fn perturbed(data: &GroupedDataset, config: &ModelConfig) -> VariationalState {
    let mut s = init_state(data, config, InitStrategy::RandomResponsibility, &mut RngStream::new(5, 0)).unwrap();
    s.rho = vec![0.3, 0.7];
    s.xi = vec![0.9, 0.1, 0.25, 0.75];
    s.p = vec![1.1, 0.8, 0.9, 2.4];
    if !s.stick_a.is_empty() {
        s.stick_a = vec![1.7];
        s.stick_b = vec![0.6];
    } else {
        s.dist_dirichlet = vec![0.9, 1.6];
    }
    if s.alpha.is_some() {
        s.alpha = Some((2.3, 1.4));
    }
    s.kernels = vec![
        NormalWishart::from_normal_inverse_gamma(-0.4, 1.5, 3.5, 2.0).unwrap(),
        NormalWishart::from_normal_inverse_gamma(1.1, 2.5, 3.5, 1.2).unwrap(),
    ];
    s
}

#[test]
fn elbo_matches_hand_written_oracle() {
    let data = toy();
    for config in [
        fisan(HyperPrior::Gamma { shape: 2.0, rate: 0.5 }),
        fisan(HyperPrior::Fixed { value: 1.3 }),
        fsan(),
    ] {
        let state = perturbed(&data, &config);
        let got = elbo(&state, &data, &config).unwrap();
        let want = oracle(&state, &data, &config);
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{}: {got} vs {want}", config.name());
        let mut s = state.clone();
        for _ in 0..5 {
            let e = iterate(&mut s, &data, &config).unwrap();
            assert!((e - oracle(&s, &data, &config)).abs() < 1e-9 * e.abs().max(1.0));
        }
    }
}

fn bench(n: usize, seed: u64) -> GroupedDataset {
    univariate_benchmark(n, &mut RngStream::new(seed, 0)).unwrap().0
}

#[test]
fn every_sweep_keeps_invariants_and_never_lowers_elbo() {
    let data = bench(20, 1);
    for config in [ModelConfig::Fisan(FisanConfig::default_for_dim(1)), ModelConfig::Fsan(FsanConfig::default_for_dim(1))] {
        for strategy in [InitStrategy::KmeansStyle, InitStrategy::RandomResponsibility] {
            let mut s = init_state(&data, &config, strategy, &mut RngStream::new(2, 0)).unwrap();
            s.check_invariants(&config).unwrap();
            for _ in 0..40 {
                let before = s.last_elbo().unwrap();
                let after = iterate(&mut s, &data, &config).unwrap();
                s.check_invariants(&config).unwrap();
                assert!(after >= before - 1e-8 * before.abs(), "{before} -> {after}");
            }
        }
    }
}

#[test]
fn single_component_truncation_gives_certain_rho() {
    let data = bench(10, 3);
    let mut c = FisanConfig::default_for_dim(1);
    c.t = 1;
    let config = ModelConfig::Fisan(c);
    let res = fit(&data, &config, &FitOptions { restarts: 2, ..Default::default() }, &RngStream::new(1, 0)).unwrap();
    assert!(res.best.rho.iter().all(|&r| r == 1.0));
}

#[test]
fn empty_components_revert_to_prior() {
    let data = bench(10, 4);
    let config = ModelConfig::Fisan(FisanConfig::default_for_dim(1));
    let mut s = init_state(&data, &config, InitStrategy::KmeansStyle, &mut RngStream::new(1, 0)).unwrap();
    // nobody uses atom 0 or distributional component 1
    for n in 0..data.n_obs() {
        let row = &mut s.xi[n * s.l..(n + 1) * s.l];
        row.fill(0.0);
        row[1] = 1.0;
    }
    for j in 0..data.n_groups() {
        let row = &mut s.rho[j * s.t..(j + 1) * s.t];
        row.fill(0.0);
        row[0] = 1.0;
    }
    san_core::cavi::update::update_omega(&mut s, &data, &config);
    san_core::cavi::update::update_kernels(&mut s, &data, &config).unwrap();
    assert_eq!(&s.kernels[0], config.kernel());
    assert!(s.p_row(1).iter().all(|&p| p == config.b()));
}

#[test]
fn infinite_tolerance_stops_after_one_sweep() {
    let data = bench(10, 5);
    let config = ModelConfig::Fisan(FisanConfig::default_for_dim(1));
    let opts = FitOptions { tol: f64::INFINITY, ..Default::default() };
    let s = fit_single(&data, &config, &opts, &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(s.elbo_trace.len(), 2);
}

#[test]
fn fits_are_deterministic() {
    let data = bench(15, 6);
    let config = ModelConfig::Fisan(FisanConfig::default_for_dim(1));
    let opts = FitOptions { restarts: 4, ..Default::default() };
    let a = fit(&data, &config, &opts, &RngStream::new(9, 0)).unwrap();
    let b = fit(&data, &config, &opts, &RngStream::new(9, 0)).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.traces, b.traces);
    let c = fit(&data, &config, &opts, &RngStream::new(10, 0)).unwrap();
    assert_ne!(a.traces, c.traces);
}

#[test]
fn model_variants_share_the_observational_updates() {
    let data = bench(10, 7);
    let fi = ModelConfig::Fisan(FisanConfig { t: 3, ..FisanConfig::default_for_dim(1) });
    let f = ModelConfig::Fsan(FsanConfig { k: 3, ..FsanConfig::default_for_dim(1) });
    let mut a = init_state(&data, &fi, InitStrategy::KmeansStyle, &mut RngStream::new(3, 0)).unwrap();
    let mut b = init_state(&data, &f, InitStrategy::KmeansStyle, &mut RngStream::new(3, 0)).unwrap();
    assert_eq!(a.rho, b.rho);
    assert_eq!(a.xi, b.xi);
    assert_eq!(a.p, b.p);
    assert_eq!(a.kernels, b.kernels);
    san_core::cavi::update::update_xi(&mut a, &data).unwrap();
    san_core::cavi::update::update_xi(&mut b, &data).unwrap();
    assert_eq!(a.xi, b.xi);
}

#[test]
fn relabeling_atoms_leaves_elbo_unchanged() {
    let data = bench(10, 8);
    let config = ModelConfig::Fisan(FisanConfig { l: 4, t: 3, ..FisanConfig::default_for_dim(1) });
    let mut s = init_state(&data, &config, InitStrategy::RandomResponsibility, &mut RngStream::new(4, 0)).unwrap();
    for _ in 0..3 {
        iterate(&mut s, &data, &config).unwrap();
    }
    let perm = [2usize, 0, 3, 1];
    let mut p = s.clone();
    for n in 0..s.n_obs {
        for (to, &from) in perm.iter().enumerate() {
            p.xi[n * 4 + to] = s.xi[n * 4 + from];
        }
    }
    for k in 0..s.t {
        for (to, &from) in perm.iter().enumerate() {
            p.p[k * 4 + to] = s.p[k * 4 + from];
        }
    }
    p.kernels = perm.iter().map(|&from| s.kernels[from].clone()).collect();
    let (e1, e2) = (elbo(&s, &data, &config).unwrap(), elbo(&p, &data, &config).unwrap());
    assert!((e1 - e2).abs() < 1e-9 * e1.abs());
    let (n1, n2) = (iterate(&mut s, &data, &config).unwrap(), iterate(&mut p, &data, &config).unwrap());
    assert!((n1 - n2).abs() < 1e-9 * n1.abs());
}

#[test]
fn dominant_responsibilities_survive_large_log_weights() {
    // well separated data push log weights far apart
    let data = GroupedDataset::new(vec![vec![vec![-1e3], vec![1e3]], vec![vec![-1e3], vec![1e3 + 1.0]]]).unwrap();
    let config = ModelConfig::Fsan(FsanConfig { k: 2, l: 2, ..FsanConfig::default_for_dim(1) });
    let res = fit(&data, &config, &FitOptions { restarts: 3, ..Default::default() }, &RngStream::new(1, 0)).unwrap();
    res.best.check_invariants(&config).unwrap();
    assert!(res.best.last_elbo().unwrap().is_finite());
}
