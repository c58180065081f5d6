//! Undoing label switching in stored chains by matching atoms to a
//! reference set of means.

use crate::gibbs::ChainStore;

/// Minimum-cost perfect assignment on a square cost matrix (row-major).
/// Returns `cols` with row r assigned to column `cols[r]`.
pub fn assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    // potentials and matching are 1-based with a virtual row/column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut row_of = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0; n];
    for j in 1..=n {
        cols[row_of[j] - 1] = j - 1;
    }
    cols
}

/// Permutes the atoms of every draw so that atom r sits closest (in total
/// squared distance) to `reference[r]`; observational labels and weights
/// follow. Atoms beyond the reference keep an arbitrary order.
pub fn relabel(chain: &ChainStore, reference: &[Vec<f64>]) -> ChainStore {
    let l = chain.l;
    assert!(reference.len() <= l, "reference has more entries than atoms");
    let mut out = chain.clone();
    let mut cost = vec![0.0; l * l];
    for draw in &mut out.draws {
        for (r, target) in reference.iter().enumerate() {
            for (x, atom) in draw.atoms.iter().enumerate() {
                cost[r * l + x] = atom.mean.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
            }
        }
        for c in &mut cost[reference.len() * l..] {
            *c = 0.0;
        }
        let perm = assignment(l, &cost);
        let mut inverse = vec![0; l];
        for (r, &x) in perm.iter().enumerate() {
            inverse[x] = r;
        }
        draw.atoms = perm.iter().map(|&x| draw.atoms[x].clone()).collect();
        for m in &mut draw.m {
            *m = inverse[*m];
        }
        for row in draw.group_weights.chunks_mut(l) {
            let old = row.to_vec();
            for (r, &x) in perm.iter().enumerate() {
                row[r] = old[x];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{Atom, ChainDraw, GibbsOptions};
    use crate::math::SquareMatrix;

    #[test]
    fn assignment_small_cases() {
        assert_eq!(assignment(2, &[1.0, 0.0, 0.0, 1.0]), vec![1, 0]);
        assert_eq!(assignment(3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]), vec![1, 0, 2]);
    }

    #[test]
    fn assignment_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 5;
        let perms = permutations(n);
        for _ in 0..50 {
            let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
            let total = |p: &[usize]| p.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum::<f64>();
            let best = perms.iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
            assert!((total(&assignment(n, &cost)) - best).abs() < 1e-12);
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn draw(means: [f64; 2], m: Vec<usize>, w: [f64; 2]) -> ChainDraw {
        ChainDraw {
            iteration: 1,
            s: vec![0],
            m,
            alpha: 1.0,
            n_active: 1,
            group_weights: w.to_vec(),
            atoms: means
                .iter()
                .map(|&x| Atom { mean: vec![x], precision: SquareMatrix::identity(1) })
                .collect(),
        }
    }

    fn chain(draws: Vec<ChainDraw>) -> ChainStore {
        ChainStore {
            model: "fsan".into(),
            n_groups: 1,
            n_obs: 3,
            l: 2,
            dim: 1,
            options: GibbsOptions { iterations: 2, burn_in: 0, thinning: 1 },
            draws,
            log_likelihood: vec![],
        }
    }

    #[test]
    fn swap_is_undone() {
        let aligned = draw([-1.0, 1.0], vec![0, 1, 1], [0.3, 0.7]);
        let swapped = draw([1.0, -1.0], vec![1, 0, 0], [0.7, 0.3]);
        let c = chain(vec![aligned.clone(), swapped]);
        let fixed = relabel(&c, &[vec![-1.0], vec![1.0]]);
        assert_eq!(fixed.draws[0], aligned);
        assert_eq!(fixed.draws[1].atoms, aligned.atoms);
        assert_eq!(fixed.draws[1].m, aligned.m);
        assert_eq!(fixed.draws[1].group_weights, aligned.group_weights);
    }

    #[test]
    fn relabel_reduces_trace_variance() {
        let draws: Vec<_> = (0..40)
            .map(|i| {
                let e = 0.01 * (i % 7) as f64;
                if i % 3 == 0 {
                    draw([2.0 + e, -2.0 - e], vec![1, 0, 0], [0.5, 0.5])
                } else {
                    draw([-2.0 - e, 2.0 + e], vec![0, 1, 1], [0.5, 0.5])
                }
            })
            .collect();
        let c = chain(draws);
        let var = |c: &ChainStore| {
            let xs: Vec<f64> = c.draws.iter().map(|d| d.atoms[0].mean[0]).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
        };
        let fixed = relabel(&c, &[vec![-2.0], vec![2.0]]);
        assert!(var(&fixed) < var(&c));
        // similarity is label-free
        let psm = |c: &ChainStore| {
            crate::summaries::psm_from_draws(c.draws.iter().map(|d| d.m.as_slice())).unwrap()
        };
        assert_eq!(psm(&c), psm(&fixed));
    }
}
