//! Thinned chain storage and its columnar binary file format.
//!
//! Binary layout (little-endian): the 8-byte magic `SANCHAIN`, a u32 format
//! version, u64 draw count, u64 column count, then every column as
//! `draws` consecutive f64 values. Column names and run metadata live in a
//! JSON sidecar.

use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::sampler::{init_chain, sweep, Atom};
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::math::{RngStream, SquareMatrix};
use crate::model::ModelConfig;

const MAGIC: &[u8; 8] = b"SANCHAIN";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsOptions {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: 1000,
            thinning: 1,
        }
    }
}

/// One stored draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraw {
    /// 1-based sweep index.
    pub iteration: usize,
    pub s: Vec<usize>,
    pub m: Vec<usize>,
    pub alpha: f64,
    pub n_active: usize,
    /// ω_{·,S_j}, J × L row-major.
    pub group_weights: Vec<f64>,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStore {
    pub model: String,
    pub n_groups: usize,
    pub n_obs: usize,
    pub l: usize,
    pub dim: usize,
    pub options: GibbsOptions,
    pub draws: Vec<ChainDraw>,
    /// Conditional log-likelihood after every sweep, burn-in included.
    pub log_likelihood: Vec<f64>,
}

/// JSON sidecar of a chain file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMetadata {
    pub format_version: u32,
    pub model: String,
    pub n_groups: usize,
    pub n_obs: usize,
    pub l: usize,
    pub dim: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_draws: usize,
    pub columns: Vec<String>,
    pub log_likelihood: Vec<f64>,
    /// Seconds since the Unix epoch when the file was written.
    pub created_unix: u64,
}

/// Runs the sampler for `iterations` sweeps, keeping every `thinning`-th
/// sweep after `burn_in`.
pub fn run(data: &GroupedDataset, config: &ModelConfig, opts: &GibbsOptions, rng: &mut RngStream) -> Result<ChainStore> {
    if opts.iterations <= opts.burn_in {
        return Err(Error::Config(format!(
            "iterations ({}) must exceed burn-in ({})",
            opts.iterations, opts.burn_in
        )));
    }
    if opts.thinning == 0 {
        return Err(Error::Config("thinning must be at least 1".into()));
    }
    let mut state = init_chain(data, config, rng)?;
    let mut store = ChainStore {
        model: config.name().to_string(),
        n_groups: data.n_groups(),
        n_obs: data.n_obs(),
        l: config.l(),
        dim: data.dim(),
        options: *opts,
        draws: Vec::with_capacity((opts.iterations - opts.burn_in) / opts.thinning),
        log_likelihood: Vec::with_capacity(opts.iterations),
    };
    for it in 1..=opts.iterations {
        sweep(&mut state, data, config, rng)?;
        store.log_likelihood.push(state.log_likelihood(data)?);
        if it > opts.burn_in && (it - opts.burn_in) % opts.thinning == 0 {
            store.draws.push(ChainDraw {
                iteration: it,
                s: state.s.clone(),
                m: state.m.clone(),
                alpha: state.alpha,
                n_active: state.n_active(),
                group_weights: state.group_weights(),
                atoms: state.atoms.clone(),
            });
        }
    }
    Ok(store)
}

impl ChainStore {
    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec!["iteration".to_string(), "alpha".into(), "n_active".into()];
        cols.extend((1..=self.n_groups).map(|j| format!("S[{j}]")));
        cols.extend((1..=self.n_obs).map(|n| format!("M[{n}]")));
        for j in 1..=self.n_groups {
            cols.extend((1..=self.l).map(|l| format!("w[{j},{l}]")));
        }
        for l in 1..=self.l {
            cols.extend((1..=self.dim).map(|x| format!("mu[{l},{x}]")));
        }
        for l in 1..=self.l {
            for x in 1..=self.dim {
                cols.extend((1..=self.dim).map(|y| format!("prec[{l},{x},{y}]")));
            }
        }
        cols
    }

    fn draw_row(&self, d: &ChainDraw) -> Vec<f64> {
        let mut row = vec![d.iteration as f64, d.alpha, d.n_active as f64];
        row.extend(d.s.iter().map(|&x| x as f64));
        row.extend(d.m.iter().map(|&x| x as f64));
        row.extend_from_slice(&d.group_weights);
        for a in &d.atoms {
            row.extend_from_slice(&a.mean);
        }
        for a in &d.atoms {
            row.extend_from_slice(a.precision.as_slice());
        }
        row
    }

    fn draw_from_row(&self, row: &[f64]) -> Result<ChainDraw> {
        let (j, n, l, d) = (self.n_groups, self.n_obs, self.l, self.dim);
        let mut pos = 3;
        let mut take = |k: usize| {
            let out = &row[pos..pos + k];
            pos += k;
            out
        };
        let s = take(j).iter().map(|&x| x as usize).collect();
        let m = take(n).iter().map(|&x| x as usize).collect();
        let group_weights = take(j * l).to_vec();
        let means: Vec<Vec<f64>> = (0..l).map(|_| take(d).to_vec()).collect();
        let mut atoms = Vec::with_capacity(l);
        for mean in means {
            atoms.push(Atom {
                mean,
                precision: SquareMatrix::from_row_major(d, take(d * d).to_vec())?,
            });
        }
        Ok(ChainDraw {
            iteration: row[0] as usize,
            alpha: row[1],
            n_active: row[2] as usize,
            s,
            m,
            group_weights,
            atoms,
        })
    }

    pub fn metadata(&self) -> ChainMetadata {
        ChainMetadata {
            format_version: FORMAT_VERSION,
            model: self.model.clone(),
            n_groups: self.n_groups,
            n_obs: self.n_obs,
            l: self.l,
            dim: self.dim,
            iterations: self.options.iterations,
            burn_in: self.options.burn_in,
            thinning: self.options.thinning,
            n_draws: self.draws.len(),
            columns: self.column_names(),
            log_likelihood: self.log_likelihood.clone(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    /// Writes the binary chain file and its JSON sidecar.
    pub fn save(&self, bin_path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<()> {
        let (bin_path, meta_path) = (bin_path.as_ref(), meta_path.as_ref());
        let rows: Vec<Vec<f64>> = self.draws.iter().map(|d| self.draw_row(d)).collect();
        let n_cols = self.column_names().len();
        let file = std::fs::File::create(bin_path).map_err(|e| Error::io(bin_path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(bin_path, e));
        write(MAGIC)?;
        write(&FORMAT_VERSION.to_le_bytes())?;
        write(&(rows.len() as u64).to_le_bytes())?;
        write(&(n_cols as u64).to_le_bytes())?;
        for c in 0..n_cols {
            for r in &rows {
                write(&r[c].to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| Error::io(bin_path, e))?;
        let meta = std::fs::File::create(meta_path).map_err(|e| Error::io(meta_path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(meta), &self.metadata())?;
        Ok(())
    }

    /// Reads the raw columns of a chain file: (draw count, column-major values).
    pub fn read_columns(bin_path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
        let bin_path = bin_path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(bin_path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(bin_path, e))?;
        let bad = |what: &str| Error::Config(format!("{}: {what}", bin_path.display()));
        if bytes.len() < 28 || &bytes[..8] != MAGIC {
            return Err(bad("not a chain file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let n_draws = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let n_cols = u64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes")) as usize;
        let body = &bytes[28..];
        if body.len() != n_draws * n_cols * 8 {
            return Err(bad("truncated data section"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok((n_draws, n_cols, values))
    }

    pub fn load(bin_path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<Self> {
        let meta_path = meta_path.as_ref();
        let text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let meta: ChainMetadata = serde_json::from_str(&text)?;
        let (n_draws, n_cols, values) = Self::read_columns(bin_path)?;
        let mut store = ChainStore {
            model: meta.model,
            n_groups: meta.n_groups,
            n_obs: meta.n_obs,
            l: meta.l,
            dim: meta.dim,
            options: GibbsOptions {
                iterations: meta.iterations,
                burn_in: meta.burn_in,
                thinning: meta.thinning,
            },
            draws: Vec::with_capacity(n_draws),
            log_likelihood: meta.log_likelihood,
        };
        if n_cols != store.column_names().len() || n_draws != meta.n_draws {
            return Err(Error::Config(format!(
                "{} does not match the shape recorded in its sidecar",
                meta_path.display()
            )));
        }
        let mut row = vec![0.0; n_cols];
        for r in 0..n_draws {
            for (c, v) in row.iter_mut().enumerate() {
                *v = values[c * n_draws + r];
            }
            store.draws.push(store.draw_from_row(&row)?);
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FsanConfig;
    use crate::simulate::univariate_benchmark;

    #[test]
    fn stored_draw_count() {
        let (ds, _) = univariate_benchmark(5, &mut RngStream::new(1, 0)).unwrap();
        let cfg = ModelConfig::Fsan(FsanConfig::default_for_dim(1));
        let opts = GibbsOptions { iterations: 11, burn_in: 10, thinning: 1 };
        let store = run(&ds, &cfg, &opts, &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(store.draws.len(), 1);
        assert_eq!(store.log_likelihood.len(), 11);
        let opts = GibbsOptions { iterations: 30, burn_in: 10, thinning: 3 };
        let store = run(&ds, &cfg, &opts, &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(store.draws.len(), 20 / 3);
        assert!(run(&ds, &cfg, &GibbsOptions { iterations: 5, burn_in: 5, thinning: 1 }, &mut RngStream::new(2, 0)).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let (ds, _) = univariate_benchmark(4, &mut RngStream::new(1, 0)).unwrap();
        let cfg = ModelConfig::Fsan(FsanConfig::default_for_dim(1));
        let opts = GibbsOptions { iterations: 8, burn_in: 2, thinning: 2 };
        let store = run(&ds, &cfg, &opts, &mut RngStream::new(3, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (bin, meta) = (dir.path().join("c.bin"), dir.path().join("c.json"));
        store.save(&bin, &meta).unwrap();
        let back = ChainStore::load(&bin, &meta).unwrap();
        // NaN α never compares equal; compare everything else
        assert_eq!(back.draws.len(), store.draws.len());
        for (a, b) in back.draws.iter().zip(&store.draws) {
            assert_eq!((a.iteration, &a.s, &a.m, &a.group_weights, &a.atoms), (b.iteration, &b.s, &b.m, &b.group_weights, &b.atoms));
        }
        let (n, cols, _) = ChainStore::read_columns(&bin).unwrap();
        assert_eq!((n, cols), (3, store.column_names().len()));
    }
}
