//! Small dense linear algebra for the d×d matrices of the Gaussian kernels.

use serde::{Deserialize, Serialize};

use super::scalar::Real;
use crate::error::{Error, Result};

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

/// Lower Cholesky factor together with ln |m|.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    pub lower: SquareMatrix<T>,
    pub log_det: T,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![T::one(); dim])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {dim}x{dim} = {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Shape(format!("row of length {} in {dim}x{dim} matrix", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data)
    }

    /// Outer product v vᵀ.
    pub fn outer(v: &[T]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = v[i] * v[j];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    /// self += c · other
    pub fn add_scaled(&mut self, c: T, other: &Self) {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + c * b;
        }
    }

    /// self += c · v vᵀ
    pub fn add_outer(&mut self, c: T, v: &[T]) {
        let d = self.dim;
        for i in 0..d {
            let ci = c * v[i];
            for j in 0..d {
                self.data[i * d + j] = self.data[i * d + j] + ci * v[j];
            }
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                for j in 0..d {
                    out.data[i * d + j] = out.data[i * d + j] + a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum())
            .collect()
    }

    /// xᵀ self x
    pub fn quad_form(&self, x: &[T]) -> T {
        let d = self.dim;
        let mut acc = T::zero();
        for i in 0..d {
            let mut row = T::zero();
            for j in 0..d {
                row = row + self.data[i * d + j] * x[j];
            }
            acc = acc + x[i] * row;
        }
        acc
    }

    /// Checks symmetry to 1e-12 relative to the largest entry.
    pub fn check_symmetric(&self) -> Result<()> {
        let scale = self
            .data
            .iter()
            .fold(T::zero(), |m, &x| m.max(x.abs()))
            .max(T::min_positive_value());
        let tol = T::lit(1e-12) * scale;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Replaces the matrix by (A + Aᵀ)/2.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let v = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    /// Cholesky decomposition with ln-determinant.
    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        self.check_symmetric()?;
        let d = self.dim;
        let mut l = Self::zeros(d);
        let mut log_det = T::zero();
        for j in 0..d {
            let mut diag = self[(j, j)];
            for k in 0..j {
                diag = diag - l[(j, k)] * l[(j, k)];
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            log_det = log_det + ljj.ln();
            for i in (j + 1)..d {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky {
            lower: l,
            log_det: log_det + log_det,
        })
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn spd_inverse(&self) -> Result<Self> {
        Ok(self.cholesky()?.inverse())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }
}

impl<T: Real> Cholesky<T> {
    pub fn dim(&self) -> usize {
        self.lower.dim
    }

    /// Solves L z = b.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let d = self.dim();
        let l = &self.lower;
        let mut z = vec![T::zero(); d];
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        z
    }

    /// Solves Lᵀ x = z.
    pub fn solve_upper(&self, z: &[T]) -> Vec<T> {
        let d = self.dim();
        let l = &self.lower;
        let mut x = vec![T::zero(); d];
        for i in (0..d).rev() {
            let mut s = z[i];
            for k in (i + 1)..d {
                s = s - l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }

    /// Solves m x = b.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn inverse(&self) -> SquareMatrix<T> {
        let d = self.dim();
        let mut inv = SquareMatrix::zeros(d);
        let mut e = vec![T::zero(); d];
        for j in 0..d {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..d {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize();
        inv
    }

    /// L Lᵀ
    pub fn reconstruct(&self) -> SquareMatrix<T> {
        self.lower.matmul(&self.lower.transpose())
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// Cholesky factor and log-determinant of `m`.
pub fn cholesky_logdet<T: Real>(m: &SquareMatrix<T>) -> Result<(SquareMatrix<T>, T)> {
    let c = m.cholesky()?;
    Ok((c.lower, c.log_det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn random_spd(d: usize, rng: &mut impl Rng) -> SquareMatrix<f64> {
        let a = SquareMatrix::from_row_major(
            d,
            (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let mut m = a.matmul(&a.transpose());
        for i in 0..d {
            m[(i, i)] += 0.5;
        }
        m
    }

    #[test]
    fn identity_and_diagonal() {
        let (l, ld) = cholesky_logdet(&SquareMatrix::<f64>::identity(4)).unwrap();
        assert_eq!(l, SquareMatrix::identity(4));
        assert_eq!(ld, 0.0);
        let (_, ld) = cholesky_logdet(&SquareMatrix::from_diag(&[2.0f64, 3.0])).unwrap();
        assert_abs_diff_eq!(ld, 6f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn round_trip_random_spd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..100 {
            let d = 1 + trial % 10;
            let m = random_spd(d, &mut rng);
            let c = m.cholesky().unwrap();
            let r = c.reconstruct();
            let scale = m.as_slice().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            for (x, y) in r.as_slice().iter().zip(m.as_slice()) {
                assert!((x - y).abs() <= 1e-10 * scale);
            }
            let diag_sum: f64 = c.lower.diag().iter().map(|x| x.ln()).sum();
            assert_abs_diff_eq!(c.log_det, 2.0 * diag_sum, epsilon = 1e-12);
            let inv = c.inverse();
            let eye = inv.matmul(&m);
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(eye[(i, j)], want, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn not_pd_reports_pivot() {
        let m = SquareMatrix::from_rows(&[vec![1.0f64, 2.0], vec![2.0, 1.0]]).unwrap();
        match m.cholesky() {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
        let asym = SquareMatrix::from_rows(&[vec![1.0f64, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(asym.cholesky(), Err(Error::NotSymmetric { .. })));
    }
}
