//! `san`: simulate, fit and summarize shared atoms nested mixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use san_core::benchmark::{self, Design, Scores};
use san_core::cavi::{fit, FittedState, InitStrategy};
use san_core::gibbs::{self, ChainStore};
use san_core::io::{self, Backend, RunConfig};
use san_core::prior::{
    cocluster_probs, correlation, distributional_cocluster_prob, mc_correlation_with, peppf, HyperPrior,
    HyperPriorSpec, McCorrelationOptions, PriorFamily, TwoSampleCounts,
};
use san_core::simulate::GroundTruth;
use san_core::summaries::{
    ari, data_grid, density_mcmc, density_true, density_vi, kl_monte_carlo, kl_on_grid, vi_partition, Level,
    Partition,
};
use san_core::{GroupedDataset, RngStream};

#[derive(Parser)]
#[command(name = "san", version, about = "Shared atoms nested mixture models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a benchmark dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Fit a model by variational inference or Gibbs sampling.
    Fit(FitArgs),
    /// Partition and density estimates from a fit, scored against a truth file if given.
    Summarize(SummarizeArgs),
    /// Prior correlation, co-clustering probabilities and pEPPF values.
    Properties(PropertiesArgs),
    /// Replicated simulation study.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Univariate design (the default).
    #[arg(long, conflicts_with = "dim")]
    univariate: bool,
    /// Multivariate design of this dimension (2 to 10).
    #[arg(long)]
    dim: Option<usize>,
    /// Observations per group.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "data.csv")]
    out: PathBuf,
    #[arg(long, default_value = "truth.json")]
    truth: PathBuf,
}

#[derive(Args, Default)]
struct ModelArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Fixed DP concentration; otherwise α ~ Gamma(shape, rate).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_shape: Option<f64>,
    #[arg(long)]
    alpha_rate: Option<f64>,
    #[arg(long)]
    prior_kappa: Option<f64>,
    #[arg(long)]
    prior_dof: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Flat JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    /// Required unless the configuration file sets it.
    #[arg(long)]
    seed: Option<u64>,
    /// Min–max scale every column to (0, 1) and apply the probit map.
    #[arg(long)]
    probit: bool,
    #[arg(long)]
    min_group_size: Option<usize>,
    #[arg(long)]
    max_group_size: Option<usize>,
    /// State JSON for VI; for Gibbs the chain is written to <out>.bin with sidecar <out>.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Vi,
    Gibbs,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    KmeansStyle,
    RandomResponsibility,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Fitted-state JSON from a VI fit.
    #[arg(long, conflicts_with = "chain", required_unless_present = "chain")]
    state: Option<PathBuf>,
    /// Chain prefix from a Gibbs fit (reads <chain>.bin and <chain>.json).
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Ground truth from `simulate`, enabling ARI and KL.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = benchmark::KL_GRID_POINTS)]
    grid_points: usize,
    /// Seed for Monte Carlo divergences on multivariate data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Fisan,
    Fsan,
    Ndp,
    Cam,
    Hhdp,
}

#[derive(Args)]
struct PropertiesArgs {
    #[arg(long, value_enum)]
    model: FamilyArg,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_shape: Option<f64>,
    #[arg(long)]
    alpha_rate: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_shape: Option<f64>,
    #[arg(long)]
    beta_rate: Option<f64>,
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long)]
    beta0_shape: Option<f64>,
    #[arg(long)]
    beta0_rate: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    b: Option<f64>,
    /// Monte Carlo hyperparameter draws when any parameter is random.
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    /// Base-measure probability of the test set.
    #[arg(long, default_value_t = 0.3)]
    h: f64,
    /// Comma-separated cluster frequencies of sample 1, for a pEPPF value.
    #[arg(long, requires = "counts2")]
    counts1: Option<String>,
    #[arg(long, requires = "counts1")]
    counts2: Option<String>,
    /// Required when any parameter is random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, conflicts_with = "dim")]
    univariate: bool,
    #[arg(long)]
    dim: Option<usize>,
    /// Observations per group; repeat for several sizes.
    #[arg(long, default_values_t = [50])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    replications: usize,
    #[arg(long, value_enum, default_value = "vi")]
    backend: BenchBackend,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    iterations: usize,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "benchmark.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchBackend {
    Vi,
    Gibbs,
    Both,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Summarize(a) => summarize(a),
        Command::Properties(a) => properties(a),
        Command::Benchmark(a) => benchmark_cmd(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn design(dim: Option<usize>) -> Design {
    match dim {
        Some(dim) => Design::Multivariate { dim },
        None => Design::Univariate,
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut rng = RngStream::new(a.seed, 0);
    let (ds, truth) = design(a.dim).simulate(a.n, &mut rng)?;
    io::write_grouped_csv(&a.out, &ds)?;
    write_json(&a.truth, &truth)?;
    Ok(())
}

fn run_config(a: &FitArgs) -> Result<RunConfig> {
    let base = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let m = &a.model;
    let flags = RunConfig {
        model: m.model.clone(),
        backend: a.backend.map(|b| match b {
            BackendArg::Vi => Backend::Vi,
            BackendArg::Gibbs => Backend::Gibbs,
        }),
        l: m.l,
        t: m.t,
        k: m.k,
        a: m.a,
        b: m.b,
        alpha: m.alpha,
        alpha_shape: m.alpha_shape,
        alpha_rate: m.alpha_rate,
        prior_kappa: m.prior_kappa,
        prior_dof: m.prior_dof,
        tol: a.tol,
        max_iter: a.max_iter,
        restarts: a.restarts,
        init: a.init.map(|i| match i {
            InitArg::KmeansStyle => InitStrategy::KmeansStyle,
            InitArg::RandomResponsibility => InitStrategy::RandomResponsibility,
        }),
        iterations: a.iterations,
        burn_in: a.burn_in,
        thinning: a.thinning,
        seed: a.seed,
        ..Default::default()
    };
    Ok(base.overlay(&flags))
}

fn load_data(path: &Path, probit: bool, min: Option<usize>, max: Option<usize>) -> Result<GroupedDataset> {
    let mut ds = io::load_grouped_csv(path)?;
    if min.is_some() || max.is_some() {
        ds = io::filter_groups(&ds, min.unwrap_or(1), max.unwrap_or(usize::MAX))?;
    }
    if probit {
        ds = io::probit_preprocess(&ds, None)?;
    }
    Ok(ds)
}

fn chain_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    (prefix.with_extension("bin"), prefix.with_extension("json"))
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let cfg = run_config(&a)?;
    let seed = cfg.seed()?;
    let ds = load_data(&a.data, a.probit, a.min_group_size, a.max_group_size)?;
    let model = cfg.model_config(ds.dim())?;
    match cfg.backend() {
        Backend::Vi => {
            let res = fit(&ds, &model, &cfg.fit_options(), &RngStream::new(seed, 0))?;
            let out = a.out.unwrap_or_else(|| PathBuf::from("state.json"));
            FittedState::from_fit(model, &res).save(&out)?;
            log::info!("best restart {} of {}", res.best_restart + 1, res.traces.len());
        }
        Backend::Gibbs => {
            let chain = gibbs::run(&ds, &model, &cfg.gibbs_options(), &mut RngStream::new(seed, 0))?;
            let (bin, meta) = chain_paths(&a.out.unwrap_or_else(|| PathBuf::from("chain")));
            chain.save(&bin, &meta)?;
        }
    }
    Ok(())
}

fn summarize(a: SummarizeArgs) -> Result<()> {
    let ds = io::load_grouped_csv(&a.data)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let truth: Option<GroundTruth> = match &a.truth {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };

    enum Fitted {
        Vi(FittedState),
        Gibbs(ChainStore),
    }
    let fitted = match (&a.state, &a.chain) {
        (Some(p), _) => Fitted::Vi(FittedState::load(p)?),
        (None, Some(prefix)) => {
            let (bin, meta) = chain_paths(prefix);
            Fitted::Gibbs(ChainStore::load(bin, meta)?)
        }
        (None, None) => bail!("one of --state or --chain is required"),
    };
    let (s, m) = match &fitted {
        Fitted::Vi(f) => vi_partition(&f.state),
        Fitted::Gibbs(c) => {
            let (s, m) = benchmark::chain_partitions(c)?;
            (Partition::new(s, Level::Distributional), Partition::new(m, Level::Observational))
        }
    };
    if s.len() != ds.n_groups() || m.len() != ds.n_obs() {
        bail!("fit does not match {} ({} groups, {} observations)", a.data.display(), ds.n_groups(), ds.n_obs());
    }
    io::write_distributional_partition(a.out_dir.join("partition_distributional.csv"), &ds, &s)?;
    io::write_observational_partition(a.out_dir.join("partition_observational.csv"), &ds, &m)?;

    let thinned = match &fitted {
        Fitted::Gibbs(c) => Some(benchmark::thin_for_density(c, benchmark::DENSITY_MAX_DRAWS)),
        Fitted::Vi(_) => None,
    };
    let estimate = |pts: &[Vec<f64>], j: usize| -> san_core::Result<_> {
        match (&fitted, &thinned) {
            (Fitted::Vi(f), _) => density_vi(&f.state, pts, j),
            (Fitted::Gibbs(_), Some(c)) => density_mcmc(c, pts, j),
            _ => unreachable!("thinned chain exists for Gibbs fits"),
        }
    };

    let mut kl = vec![None; ds.n_groups()];
    if ds.dim() == 1 {
        let grid = data_grid(&ds, benchmark::KL_GRID_SDS, a.grid_points)?;
        let grids = (0..ds.n_groups()).map(|j| estimate(&grid, j)).collect::<san_core::Result<Vec<_>>>()?;
        io::write_densities(a.out_dir.join("density.csv"), ds.keys(), &grids)?;
        if let Some(t) = &truth {
            for (j, g) in grids.iter().enumerate() {
                kl[j] = Some(kl_on_grid(&density_true(t, &grid, j)?, g)?);
            }
        }
    } else if let Some(t) = &truth {
        let mut rng = RngStream::new(a.seed, 0);
        for (j, slot) in kl.iter_mut().enumerate() {
            let f = |y: &[f64]| Ok(estimate(&[y.to_vec()], j)?.values[0]);
            *slot = Some(kl_monte_carlo(t, j, f, benchmark::KL_MC_SAMPLES, &mut rng)?);
        }
    }

    let mut w = csv::Writer::from_path(a.out_dir.join("metrics.csv"))?;
    w.write_record(["metric", "group", "value"])?;
    w.write_record(["distributional_clusters", "", &s.n_clusters().to_string()])?;
    w.write_record(["observational_clusters", "", &m.n_clusters().to_string()])?;
    if let Some(t) = &truth {
        w.write_record(["distributional_ari", "", &ari(&s.labels, &t.distributional)?.to_string()])?;
        w.write_record(["observational_ari", "", &ari(&m.labels, &t.flat_observational())?.to_string()])?;
        for (j, v) in kl.iter().enumerate() {
            if let Some(v) = v {
                w.write_record(["kl", &ds.keys()[j], &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().with_context(|| format!("'{x}' is not a count")))
        .collect()
}

fn hyper(fixed: Option<f64>, shape: Option<f64>, rate: Option<f64>, name: &str) -> Result<(f64, Option<HyperPrior>)> {
    match (fixed, shape, rate) {
        (Some(v), None, None) => Ok((v, None)),
        (None, Some(shape), Some(rate)) => Ok((1.0, Some(HyperPrior::Gamma { shape, rate }))),
        (None, None, None) => Ok((1.0, None)),
        _ => bail!("give either --{name} or both --{name}-shape and --{name}-rate"),
    }
}

fn properties(a: PropertiesArgs) -> Result<()> {
    let (alpha, alpha_hp) = hyper(a.alpha, a.alpha_shape, a.alpha_rate, "alpha")?;
    let (beta, beta_hp) = hyper(a.beta, a.beta_shape, a.beta_rate, "beta")?;
    let (beta0, beta0_hp) = hyper(a.beta0, a.beta0_shape, a.beta0_rate, "beta0")?;
    let l = a.l.unwrap_or(25);
    let b = a.b.unwrap_or(0.05);
    let family = match a.model {
        FamilyArg::Fisan => PriorFamily::Fisan { alpha, l, b },
        FamilyArg::Fsan => PriorFamily::Fsan { a: a.a.unwrap_or(0.05), k: a.k.unwrap_or(20), l, b },
        FamilyArg::Ndp => PriorFamily::Ndp { alpha, beta },
        FamilyArg::Cam => PriorFamily::Cam { alpha, beta },
        FamilyArg::Hhdp => PriorFamily::Hhdp { alpha, beta, beta0 },
    };
    family.validate()?;
    let spec = HyperPriorSpec { alpha: alpha_hp, beta: beta_hp, beta0: beta0_hp, ..Default::default() };
    let random = alpha_hp.is_some() || beta_hp.is_some() || beta0_hp.is_some();

    let mut out = serde_json::Map::new();
    out.insert("family".into(), json!(family.name()));
    out.insert("parameters".into(), serde_json::to_value(family)?);
    if random {
        let Some(seed) = a.seed else { bail!("--seed is required when a parameter is random") };
        out.insert("hyperpriors".into(), serde_json::to_value(spec)?);
        let opts = McCorrelationOptions { h: a.h, draws: a.draws, ..Default::default() };
        let (r, se) = mc_correlation_with(&family, &spec, opts, &RngStream::new(seed, 0))?;
        out.insert("correlation".into(), json!(r));
        out.insert("correlation_se".into(), json!(se));
        out.insert("method".into(), json!("monte-carlo"));
    } else {
        out.insert("correlation".into(), json!(correlation(&family)?));
        out.insert("method".into(), json!("closed-form"));
        out.insert("distributional_cocluster".into(), json!(distributional_cocluster_prob(&family)?));
        if let Ok((_, obs)) = cocluster_probs(&family) {
            out.insert("observational_cocluster".into(), json!(obs));
        }
        if let (Some(c1), Some(c2)) = (&a.counts1, &a.counts2) {
            let counts = TwoSampleCounts::new(parse_counts(c1)?, parse_counts(c2)?)?;
            out.insert("peppf".into(), json!(peppf(&family, &counts)?.exp()));
        }
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(out))? + "\n";
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn benchmark_cmd(a: BenchmarkArgs) -> Result<()> {
    let design = design(a.dim);
    let model = benchmark::default_model(design.dim());
    let fit_opts = san_core::cavi::FitOptions { restarts: a.restarts, tol: a.tol, ..Default::default() };
    let gibbs_opts = gibbs::GibbsOptions { iterations: a.iterations, burn_in: a.burn_in, thinning: 1 };
    let jobs: Vec<(usize, usize)> = a.n.iter().flat_map(|&n| (0..a.replications).map(move |r| (n, r))).collect();
    let rows: Vec<Vec<(String, Scores)>> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let (mut data_rng, vi_rng, gibbs_rng) = benchmark::replication_streams(a.seed ^ n as u64, r);
            let (ds, truth) = design.simulate(n, &mut data_rng)?;
            let mut out = Vec::new();
            if a.backend != BenchBackend::Gibbs {
                out.push(("vi".into(), benchmark::score_vi(&ds, &truth, &model, &fit_opts, &vi_rng)?));
            }
            if a.backend != BenchBackend::Vi {
                out.push(("gibbs".into(), benchmark::score_gibbs(&ds, &truth, &model, &gibbs_opts, &gibbs_rng)?));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record([
        "configuration",
        "n_per_group",
        "replication",
        "backend",
        "distributional_ari",
        "observational_ari",
        "kl_median",
        "runtime_seconds",
        "state_bytes",
    ])?;
    for (&(n, r), reps) in jobs.iter().zip(&rows) {
        for (backend, s) in reps {
            w.write_record([
                design.label(),
                n.to_string(),
                (r + 1).to_string(),
                backend.clone(),
                s.distributional_ari.to_string(),
                s.observational_ari.to_string(),
                s.kl_median().to_string(),
                s.runtime_seconds.to_string(),
                s.state_bytes.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
