//! Dense complex matrices at desk scale.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Largest dimension accepted by [`ComplexMatrix`].
pub const MAX_DIM: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("matrix dimension {0} exceeds the cap of {MAX_DIM}")]
    TooLarge(usize),
    #[error("expected {expected} entries, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("row {row} has {len} entries, expected {dim}")]
    RaggedRow { row: usize, len: usize, dim: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self, MatrixError> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self, MatrixError> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self, MatrixError> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(MatrixError::ShapeMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(MatrixError::RaggedRow {
                    row,
                    len: r.len(),
                    dim,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    /// Real matrix promoted to complex.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[Complex64]) -> Result<Self, MatrixError> {
        let mut m = Self::zeros(values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Fails on the first NaN or infinite entry.
    pub fn check_finite(&self) -> Result<(), MatrixError> {
        match self
            .data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            Some(k) => Err(MatrixError::NonFinite {
                row: k / self.dim,
                col: k % self.dim,
            }),
            None => Ok(()),
        }
    }

    /// Exact complex symmetry `H[i][j] == H[j][i]`. This is transpose
    /// symmetry, not Hermiticity.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = self.clone();
        for i in 0..n {
            for j in 0..n {
                t[(i, j)] = self[(j, i)];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        t.data.iter_mut().for_each(|z| *z = z.conj());
        t
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim, "vector length must match matrix dim");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul requires equal dims");
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other[(k, j)];
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "add requires equal dims");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap_or(k);
            if a[p * n + k].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        det
    }
}

fn check_dim(dim: usize) -> Result<(), MatrixError> {
    if dim == 0 {
        Err(MatrixError::Empty)
    } else if dim > MAX_DIM {
        Err(MatrixError::TooLarge(dim))
    } else {
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.6e}{:+.6e}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Hermitian inner product `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear product `Σ a_i b_i`, i.e. `⟨a*|b⟩`.
pub fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(ComplexMatrix::zeros(0), Err(MatrixError::Empty));
        assert_eq!(ComplexMatrix::zeros(1025), Err(MatrixError::TooLarge(1025)));
        assert!(matches!(
            ComplexMatrix::from_row_major(2, vec![c(0.0, 0.0); 3]),
            Err(MatrixError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(2.0, 0.0)]]),
            Err(MatrixError::RaggedRow { row: 0, .. })
        ));
    }

    #[test]
    fn symmetry_is_transpose_not_hermitian() {
        let sym = ComplexMatrix::from_rows(&[
            vec![c(1.0, -0.5), c(0.0, -0.5)],
            vec![c(0.0, -0.5), c(-1.0, -0.5)],
        ])
        .unwrap();
        assert!(sym.is_symmetric());
        let herm = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(1.0, 0.0)],
        ])
        .unwrap();
        assert!(!herm.is_symmetric());
    }

    #[test]
    fn determinant_of_small_matrices() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 1.0), c(5.0, 0.0)],
        ])
        .unwrap();
        let d = m.determinant();
        assert!((d - c(-6.0, -2.0)).norm() < 1e-15);
        assert_eq!(ComplexMatrix::identity(5).unwrap().determinant(), c(1.0, 0.0));
    }

    #[test]
    fn non_finite_entries_are_located() {
        let mut m = ComplexMatrix::zeros(3).unwrap();
        m[(2, 1)] = c(f64::NAN, 0.0);
        assert_eq!(m.check_finite(), Err(MatrixError::NonFinite { row: 2, col: 1 }));
    }
}
