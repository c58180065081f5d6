use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{init_state, InitStrategy, VariationalState};
use super::update::iterate;
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::math::RngStream;
use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop once the ELBO gain of one sweep drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub init: InitStrategy,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 1000,
            restarts: 1,
            init: InitStrategy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub best: VariationalState,
    pub best_restart: usize,
    /// ELBO trace of every restart (empty for failed restarts).
    pub traces: Vec<Vec<f64>>,
    /// Wall time of every restart, in seconds.
    pub run_seconds: Vec<f64>,
    pub failures: Vec<(usize, String)>,
}

impl FitResult {
    /// Longest single-restart wall time.
    pub fn max_run_seconds(&self) -> f64 {
        self.run_seconds.iter().copied().fold(0.0, f64::max)
    }
}

/// Runs CAVI from one initialization until convergence or `max_iter` sweeps.
pub fn fit_single(
    data: &GroupedDataset,
    config: &ModelConfig,
    opts: &FitOptions,
    rng: &mut RngStream,
) -> Result<VariationalState> {
    let mut state = init_state(data, config, opts.init, rng)?;
    let mut prev = state.last_elbo().expect("initial ELBO recorded");
    for _ in 0..opts.max_iter {
        let cur = iterate(&mut state, data, config)?;
        let gain = cur - prev;
        prev = cur;
        if !(gain >= opts.tol) {
            break;
        }
    }
    Ok(state)
}

/// Independent restarts (restart r uses stream `rng.child(r)`); keeps the
/// one with the highest final ELBO, ties going to the lowest index.
pub fn fit(data: &GroupedDataset, config: &ModelConfig, opts: &FitOptions, rng: &RngStream) -> Result<FitResult> {
    if opts.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
    }
    config.validate(data.dim())?;
    let runs: Vec<(Result<VariationalState>, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = Instant::now();
            let mut stream = rng.child(r as u64);
            let out = fit_single(data, config, opts, &mut stream);
            (out, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut best: Option<(usize, VariationalState)> = None;
    let mut traces = Vec::with_capacity(runs.len());
    let mut run_seconds = Vec::with_capacity(runs.len());
    let mut failures = Vec::new();
    for (r, (out, secs)) in runs.into_iter().enumerate() {
        run_seconds.push(secs);
        match out {
            Ok(state) => {
                traces.push(state.elbo_trace.clone());
                let elbo = state.last_elbo().unwrap_or(f64::NEG_INFINITY);
                log::debug!("restart {r}: {} sweeps, ELBO {elbo:.6}", state.elbo_trace.len() - 1);
                let better = match &best {
                    None => true,
                    Some((_, b)) => elbo > b.last_elbo().unwrap_or(f64::NEG_INFINITY),
                };
                if better {
                    best = Some((r, state));
                }
            }
            Err(e) => {
                log::warn!("restart {r} failed: {e}");
                traces.push(Vec::new());
                failures.push((r, e.to_string()));
            }
        }
    }
    match best {
        Some((best_restart, best)) => Ok(FitResult {
            best,
            best_restart,
            traces,
            run_seconds,
            failures,
        }),
        None => Err(Error::AllRestartsFailed {
            restarts: opts.restarts,
            first: failures.first().map(|f| f.1.clone()).unwrap_or_default(),
        }),
    }
}
