//! Reading and writing grouped tables, preprocessing, and the flat run
//! configuration.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cavi::{FitOptions, InitStrategy};
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::gibbs::GibbsOptions;
use crate::kernel::NormalWishart;
use crate::math::SquareMatrix;
use crate::model::{FisanConfig, FsanConfig, ModelConfig};
use crate::prior::HyperPrior;
use crate::summaries::{DensityGrid, Partition};

/// Clamp applied to min–max scaled values before the probit map.
pub const PROBIT_EPS: f64 = 1e-6;

/// Rows of a grouped CSV: a key column followed by numeric features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub key_column: String,
    pub columns: Vec<String>,
    pub keys: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
        let header = reader.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Parse {
                row: 1,
                column: header.len().max(1),
                detail: "header needs a group column and at least one feature".into(),
            });
        }
        let mut table = FeatureTable {
            key_column: header[0].to_string(),
            columns: header.iter().skip(1).map(str::to_string).collect(),
            keys: Vec::new(),
            rows: Vec::new(),
        };
        for (i, record) in reader.records().enumerate() {
            // the header is line 1
            let row = i + 2;
            let record = record?;
            if record.len() != header.len() {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(header.len()) + 1,
                    detail: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            let key = record[0].trim();
            if key.is_empty() {
                return Err(Error::Parse { row, column: 1, detail: "empty group key".into() });
            }
            let mut values = Vec::with_capacity(header.len() - 1);
            for (c, cell) in record.iter().enumerate().skip(1) {
                let cell = cell.trim();
                if cell.is_empty() {
                    return Err(Error::Parse { row, column: c + 1, detail: "missing value".into() });
                }
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    detail: format!("'{cell}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { row, column: c + 1, detail: format!("non-finite value {cell}") });
                }
                values.push(v);
            }
            table.keys.push(key.to_string());
            table.rows.push(values);
        }
        if table.rows.is_empty() {
            return Err(Error::Parse { row: 2, column: 1, detail: format!("{} has no data rows", path.display()) });
        }
        Ok(table)
    }

    /// Groups in order of first appearance, rows kept in file order.
    pub fn into_dataset(self) -> Result<GroupedDataset> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut keys = Vec::new();
        let mut groups: Vec<Vec<Vec<f64>>> = Vec::new();
        for (key, row) in self.keys.into_iter().zip(self.rows) {
            let j = *index.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[j].push(row);
        }
        GroupedDataset::with_keys(keys, groups)
    }
}

pub fn load_grouped_csv(path: impl AsRef<Path>) -> Result<GroupedDataset> {
    FeatureTable::read(path)?.into_dataset()
}

/// Shortest round-trip text for `x`, in exponent form outside [1e-5, 1e16).
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn feature_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|c| format!("y{c}")).collect()
}

/// Writes `group,y1,…,yd` rows; values use the shortest representation that
/// parses back to the same f64.
pub fn write_grouped_csv(path: impl AsRef<Path>, data: &GroupedDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["group".to_string()];
    header.extend(feature_names(data.dim()));
    w.write_record(&header)?;
    for j in 0..data.n_groups() {
        for y in data.group_obs(j) {
            let mut rec = vec![data.keys()[j].clone()];
            rec.extend(y.iter().map(|&v| format_f64(v)));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Per-column min–max scaling to (0, 1), clamped to [ε, 1 − ε], followed by
/// the standard normal quantile. Bounds default to the observed range.
pub fn probit_preprocess(data: &GroupedDataset, bounds: Option<&[(f64, f64)]>) -> Result<GroupedDataset> {
    let d = data.dim();
    let bounds: Vec<(f64, f64)> = match bounds {
        Some(b) if b.len() != d => {
            return Err(Error::Preprocess(format!("{} bounds for {d} columns", b.len())));
        }
        Some(b) => b.to_vec(),
        None => (0..d)
            .map(|c| {
                data.values()
                    .iter()
                    .skip(c)
                    .step_by(d)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
            })
            .collect(),
    };
    for (c, &(lo, hi)) in bounds.iter().enumerate() {
        if !(hi > lo) {
            return Err(Error::Preprocess(format!("column {} is constant or has empty bounds [{lo}, {hi}]", c + 1)));
        }
    }
    let normal = Normal::standard();
    data.map_values(|c, v| {
        let (lo, hi) = bounds[c];
        let u = ((v - lo) / (hi - lo)).clamp(PROBIT_EPS, 1.0 - PROBIT_EPS);
        Ok(normal.inverse_cdf(u))
    })
}

/// Keeps groups whose size lies in [min_size, max_size].
pub fn filter_groups(data: &GroupedDataset, min_size: usize, max_size: usize) -> Result<GroupedDataset> {
    if min_size > max_size {
        return Err(Error::Config(format!("min size {min_size} exceeds max size {max_size}")));
    }
    let keep: Vec<usize> = (0..data.n_groups())
        .filter(|&j| (min_size..=max_size).contains(&data.group_size(j)))
        .collect();
    if keep.is_empty() {
        return Err(Error::Preprocess(format!("no group has between {min_size} and {max_size} observations")));
    }
    data.select_groups(&keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Vi,
    Gibbs,
}

/// Flat run configuration. Absent fields fall back to the model defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub backend: Option<Backend>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Fixed concentration; overrides the gamma hyperprior.
    pub alpha: Option<f64>,
    pub alpha_shape: Option<f64>,
    pub alpha_rate: Option<f64>,
    pub prior_mean: Option<Vec<f64>>,
    pub prior_kappa: Option<f64>,
    pub prior_dof: Option<f64>,
    /// Row-major d × d Wishart scale.
    pub prior_scale: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub restarts: Option<usize>,
    pub init: Option<InitStrategy>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: &RunConfig) -> Self {
        let s = &mut self;
        overlay!(
            s, other, model, backend, l, t, k, a, b, alpha, alpha_shape, alpha_rate, prior_mean, prior_kappa,
            prior_dof, prior_scale, tol, max_iter, restarts, init, iterations, burn_in, thinning, seed
        );
        self
    }

    pub fn backend(&self) -> Backend {
        self.backend.unwrap_or_default()
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required".into()))
    }

    fn kernel(&self, d: usize) -> Result<NormalWishart> {
        let default = NormalWishart::default_for_dim(d);
        let scale = match &self.prior_scale {
            Some(s) => SquareMatrix::from_row_major(d, s.clone())?,
            None => default.scale.clone(),
        };
        let kernel = NormalWishart::new(
            self.prior_mean.clone().unwrap_or(default.mean),
            self.prior_kappa.unwrap_or(default.kappa),
            self.prior_dof.unwrap_or(default.dof),
            scale,
        )?;
        Ok(kernel)
    }

    /// The model for data of dimension `d`.
    pub fn model_config(&self, d: usize) -> Result<ModelConfig> {
        let kernel = self.kernel(d)?;
        let config = match self.model.as_deref().unwrap_or("fisan") {
            "fisan" => {
                let mut c = FisanConfig::default_for_dim(d);
                c.kernel = kernel;
                c.l = self.l.unwrap_or(c.l);
                c.t = self.t.unwrap_or(c.t);
                c.b = self.b.unwrap_or(c.b);
                if let Some(value) = self.alpha {
                    c.alpha = HyperPrior::Fixed { value };
                } else if let HyperPrior::Gamma { shape, rate } = c.alpha {
                    c.alpha = HyperPrior::Gamma {
                        shape: self.alpha_shape.unwrap_or(shape),
                        rate: self.alpha_rate.unwrap_or(rate),
                    };
                }
                ModelConfig::Fisan(c)
            }
            "fsan" => {
                let mut c = FsanConfig::default_for_dim(d);
                c.kernel = kernel;
                c.k = self.k.unwrap_or(c.k);
                c.l = self.l.unwrap_or(c.l);
                c.a = self.a.unwrap_or(c.a);
                c.b = self.b.unwrap_or(c.b);
                ModelConfig::Fsan(c)
            }
            other => return Err(Error::Config(format!("unknown model '{other}' (expected fisan or fsan)"))),
        };
        config.validate(d)?;
        Ok(config)
    }

    pub fn fit_options(&self) -> FitOptions {
        let d = FitOptions::default();
        FitOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            restarts: self.restarts.unwrap_or(d.restarts),
            init: self.init.unwrap_or(d.init),
        }
    }

    pub fn gibbs_options(&self) -> GibbsOptions {
        let d = GibbsOptions::default();
        GibbsOptions {
            iterations: self.iterations.unwrap_or(d.iterations),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            thinning: self.thinning.unwrap_or(d.thinning),
        }
    }
}

/// `group,label` rows for a distributional partition; labels 1-based.
pub fn write_distributional_partition(path: impl AsRef<Path>, data: &GroupedDataset, p: &Partition) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["group", "label"])?;
    for (j, &k) in p.canonical().labels.iter().enumerate() {
        w.write_record([data.keys()[j].clone(), (k + 1).to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// `group,index,label` rows for an observational partition; index and label
/// 1-based.
pub fn write_observational_partition(path: impl AsRef<Path>, data: &GroupedDataset, p: &Partition) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["group", "index", "label"])?;
    let labels = p.canonical().labels;
    for j in 0..data.n_groups() {
        for (i, n) in data.group_range(j).enumerate() {
            w.write_record([data.keys()[j].clone(), (i + 1).to_string(), (labels[n] + 1).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// `group,y1,…,yd,density` rows, one block per group.
pub fn write_densities(path: impl AsRef<Path>, keys: &[String], grids: &[DensityGrid]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let d = grids.first().and_then(|g| g.points.first()).map_or(1, Vec::len);
    let mut header = vec!["group".to_string()];
    header.extend(feature_names(d));
    header.push("density".into());
    w.write_record(&header)?;
    for (key, g) in keys.iter().zip(grids) {
        for (y, v) in g.points.iter().zip(&g.values) {
            let mut rec = vec![key.clone()];
            rec.extend(y.iter().map(|&x| format_f64(x)));
            rec.push(format_f64(*v));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
