use serde::{Deserialize, Serialize};

use crate::cavi::VariationalState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Distributional,
    Observational,
}

/// Cluster labels of groups (distributional) or observations
/// (observational).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub level: Level,
}

impl Partition {
    pub fn new(labels: Vec<usize>, level: Level) -> Self {
        Self { labels, level }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels renumbered 0, 1, … in order of first appearance.
    pub fn canonical(&self) -> Self {
        Self::new(crate::prior::monte_carlo::canonical_labels(&self.labels), self.level)
    }

    pub fn n_clusters(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

fn argmax(row: &[f64]) -> usize {
    // first maximum wins ties
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Row-wise argmax of ρ and ξ.
pub fn vi_partition(state: &VariationalState) -> (Partition, Partition) {
    let s = (0..state.n_groups).map(|j| argmax(state.rho_row(j))).collect();
    let m = (0..state.n_obs).map(|n| argmax(state.xi_row(n))).collect();
    (Partition::new(s, Level::Distributional), Partition::new(m, Level::Observational))
}

/// Symmetric matrix of pairwise co-clustering frequencies, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.n + v]
    }
}

/// Posterior similarity matrix of a set of label draws.
pub fn psm_from_draws<'a>(draws: impl IntoIterator<Item = &'a [usize]>) -> Result<SimilarityMatrix> {
    let mut iter = draws.into_iter().peekable();
    let n = match iter.peek() {
        Some(d) => d.len(),
        None => return Err(Error::Config("similarity matrix needs at least one draw".into())),
    };
    let mut counts = vec![0u32; n * n];
    let mut total = 0u32;
    for d in iter {
        if d.len() != n {
            return Err(Error::Shape(format!("draw of length {} (expected {n})", d.len())));
        }
        total += 1;
        for u in 0..n {
            counts[u * n + u] += 1;
            for v in (u + 1)..n {
                if d[u] == d[v] {
                    counts[u * n + v] += 1;
                    counts[v * n + u] += 1;
                }
            }
        }
    }
    Ok(SimilarityMatrix {
        n,
        values: counts.into_iter().map(|c| c as f64 / total as f64).collect(),
    })
}

/// Point estimate minimizing Binder's loss Σ_{u<v} |1{same} − psm_uv| by
/// greedy agglomeration from singletons: the pair of clusters whose merge
/// lowers the loss most is joined until no merge helps. Ties go to the
/// lowest cluster indices.
pub fn mcmc_partition(psm: &SimilarityMatrix, level: Level) -> Partition {
    let n = psm.n;
    // gain[a·n + b] = Σ_{u∈a, v∈b} (psm_uv − 0.5); merging a and b lowers
    // the loss by exactly this amount
    let mut gain: Vec<f64> = psm.values.iter().map(|x| x - 0.5).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ia, &a) in alive.iter().enumerate() {
            for &b in &alive[ia + 1..] {
                let g = gain[a * n + b];
                if g > 0.0 && best.is_none_or(|(bg, _, _)| g > bg) {
                    best = Some((g, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        for &c in &alive {
            if c != a && c != b {
                let merged = gain[a * n + c] + gain[b * n + c];
                gain[a * n + c] = merged;
                gain[c * n + a] = merged;
            }
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        alive.retain(|&c| c != b);
    }
    let mut labels = vec![0; n];
    for (c, &a) in alive.iter().enumerate() {
        for &u in &members[a] {
            labels[u] = c;
        }
    }
    Partition::new(labels, level).canonical()
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table. When both partitions
/// are trivial in the same way (expected index equals its maximum) the
/// index is 1 for identical partitions and 0 otherwise.
pub fn ari(p: &[usize], q: &[usize]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("partitions of length {} and {}", p.len(), q.len())));
    }
    let pc = crate::prior::monte_carlo::canonical_labels(p);
    let qc = crate::prior::monte_carlo::canonical_labels(q);
    let np = pc.iter().max().map_or(0, |m| m + 1);
    let nq = qc.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; np * nq];
    for (&a, &b) in pc.iter().zip(&qc) {
        table[a * nq + b] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let rows: f64 = (0..np).map(|a| choose2(table[a * nq..(a + 1) * nq].iter().sum())).sum();
    let cols: f64 = (0..nq).map(|b| choose2((0..np).map(|a| table[a * nq + b]).sum())).sum();
    let total = choose2(p.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < 1e-12 {
        return Ok(if pc == qc { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}
