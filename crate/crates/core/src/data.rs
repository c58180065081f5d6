//! Grouped observations: J groups of d-dimensional vectors with ragged sizes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    dim: usize,
    keys: Vec<String>,
    /// Start of each group in `values`, in observations; length J + 1.
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl GroupedDataset {
    /// Builds a dataset from per-group observation lists. Keys default to
    /// the 1-based group index.
    pub fn new(groups: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let keys = (1..=groups.len()).map(|j| j.to_string()).collect();
        Self::with_keys(keys, groups)
    }

    pub fn with_keys(keys: Vec<String>, groups: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Shape("dataset needs at least one group".into()));
        }
        if keys.len() != groups.len() {
            return Err(Error::Shape(format!("{} keys for {} groups", keys.len(), groups.len())));
        }
        let dim = groups
            .iter()
            .find_map(|g| g.first().map(Vec::len))
            .ok_or_else(|| Error::Shape("dataset has no observations".into()))?;
        if dim == 0 {
            return Err(Error::Shape("observations must have dimension ≥ 1".into()));
        }
        let mut offsets = vec![0];
        let mut values = Vec::new();
        for (j, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::Shape(format!("group {} is empty", keys[j])));
            }
            for (i, y) in g.iter().enumerate() {
                if y.len() != dim {
                    return Err(Error::Shape(format!(
                        "observation {i} of group {} has dimension {} (expected {dim})",
                        keys[j],
                        y.len()
                    )));
                }
                values.extend_from_slice(y);
            }
            offsets.push(offsets[j] + g.len());
        }
        Ok(Self {
            dim,
            keys,
            offsets,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_groups(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn n_obs(&self) -> usize {
        self.offsets[self.n_groups()]
    }

    pub fn group_size(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        (0..self.n_groups()).map(|j| self.group_size(j)).collect()
    }

    /// Range of global observation indices belonging to group j.
    pub fn group_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Observation by global index.
    pub fn obs(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn group_obs(&self, j: usize) -> impl Iterator<Item = &[f64]> {
        self.group_range(j).map(move |n| self.obs(n))
    }

    /// Group index of every observation, in global order.
    pub fn group_of_obs(&self) -> Vec<usize> {
        (0..self.n_groups())
            .flat_map(|j| std::iter::repeat_n(j, self.group_size(j)))
            .collect()
    }

    pub fn to_groups(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_groups())
            .map(|j| self.group_obs(j).map(<[f64]>::to_vec).collect())
            .collect()
    }

    /// Keeps the listed groups, in the given order.
    pub fn select_groups(&self, groups: &[usize]) -> Result<Self> {
        let all = self.to_groups();
        Self::with_keys(
            groups.iter().map(|&j| self.keys[j].clone()).collect(),
            groups.iter().map(|&j| all[j].clone()).collect(),
        )
    }

    /// Per-column (min, max) over all observations.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        let mut r = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for n in 0..self.n_obs() {
            for (c, &v) in self.obs(n).iter().enumerate() {
                r[c].0 = r[c].0.min(v);
                r[c].1 = r[c].1.max(v);
            }
        }
        r
    }

    /// Applies `f(column, value)` to every entry.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> Result<f64>) -> Result<Self> {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            *v = f(i % self.dim, *v)?;
        }
        Ok(out)
    }

    /// Per-column mean and standard deviation.
    /// All observations, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_moments(&self) -> Vec<(f64, f64)> {
        let n = self.n_obs() as f64;
        (0..self.dim)
            .map(|c| {
                let m = (0..self.n_obs()).map(|i| self.obs(i)[c]).sum::<f64>() / n;
                let v = (0..self.n_obs()).map(|i| (self.obs(i)[c] - m).powi(2)).sum::<f64>() / n;
                (m, v.sqrt())
            })
            .collect()
    }
}
