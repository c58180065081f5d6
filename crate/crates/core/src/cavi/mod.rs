//! Mean-field coordinate-ascent variational inference for fiSAN and fSAN
//! mixtures of Gaussian kernels.

pub mod elbo;
pub mod fit;
pub mod state;
pub mod update;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use elbo::{elbo, elbo_terms, ElboTerms};
pub use fit::{fit, fit_single, FitOptions, FitResult};
pub use state::{init_state, InitStrategy, VariationalState};
pub use update::iterate;

use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Version of the fitted-state JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// A fitted variational state together with the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedState {
    pub schema_version: u32,
    pub config: ModelConfig,
    pub state: VariationalState,
    /// Final ELBO of every restart.
    pub restart_elbos: Vec<Option<f64>>,
    pub best_restart: usize,
}

impl FittedState {
    pub fn from_fit(config: ModelConfig, result: &FitResult) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            state: result.best.clone(),
            restart_elbos: result.traces.iter().map(|t| t.last().copied()).collect(),
            best_restart: result.best_restart,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let out: Self = serde_json::from_str(&text)?;
        if out.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{} has schema version {}, expected {SCHEMA_VERSION}",
                path.display(),
                out.schema_version
            )));
        }
        Ok(out)
    }
}
