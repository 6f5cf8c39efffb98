//! Dense linear-algebra kernels the DMD engine is built on: reduced SVD,
//! small dense real eigendecomposition with complex eigenpairs, and
//! SVD-based complex least squares.
//!
//! Matrices are stored column-major. All operations are pure functions of
//! their inputs; the result values are immutable and `Send + Sync`.

mod eig;
mod lstsq;
mod svd;

pub use eig::eig_dense;
pub use lstsq::{jacobi_svd_complex, least_squares};
pub use svd::reduced_svd;

use num_complex::Complex64;
use std::ops::{Index, IndexMut};
use thiserror::Error;

/// Relative cutoff below which a singular value counts as numerically zero.
///
/// A singular value `s` is treated as zero when `s <= RANK_CUTOFF * s_max`.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("input matrix contains a non-finite entry")]
    NonFinite,
    #[error("{0}")]
    BadArgument(String),
    #[error("rank {requested} out of range 1..={max}")]
    RankOutOfRange { requested: usize, max: usize },
    #[error("iteration failed to converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },
}

/// Dense real matrix, column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from entries listed column by column.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        Self { rows, cols, data }
    }

    /// Builds a matrix from entries listed row by row (convenient in tests).
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = data[i * cols + j];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Copy of the column block `first..last` (half-open, zero-based).
    pub fn columns_range(&self, first: usize, last: usize) -> RealMatrix {
        assert!(first < last && last <= self.cols, "column range out of bounds");
        RealMatrix::from_column_major(
            self.rows,
            last - first,
            self.data[first * self.rows..last * self.rows].to_vec(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> RealMatrix {
        let mut t = RealMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * rhs`, column-oriented accumulation.
    pub fn matmul(&self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = RealMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for l in 0..self.cols {
                let s = rhs[(l, j)];
                if s != 0.0 {
                    let a = self.column(l);
                    let c = out.column_mut(j);
                    for i in 0..a.len() {
                        c[i] += s * a[i];
                    }
                }
            }
        }
        out
    }

    /// `self^T * rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.rows, rhs.rows, "row counts must agree");
        let mut out = RealMatrix::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            let b = rhs.column(j);
            for i in 0..self.cols {
                let a = self.column(i);
                out[(i, j)] = a.iter().zip(b).map(|(x, y)| x * y).sum();
            }
        }
        out
    }

    /// `self * rhs` where `rhs` is complex.
    pub fn matmul_complex(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows(), "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols());
        for j in 0..rhs.cols() {
            for l in 0..self.cols {
                let s = rhs[(l, j)];
                if s != Complex64::ZERO {
                    let a = self.column(l);
                    let c = out.column_mut(j);
                    for i in 0..a.len() {
                        c[i] += s * a[i];
                    }
                }
            }
        }
        out
    }

    /// Scales column `j` by `scales[j]`.
    pub fn scale_columns(&mut self, scales: &[f64]) {
        assert_eq!(scales.len(), self.cols, "one scale per column required");
        for (j, &s) in scales.iter().enumerate() {
            for v in self.column_mut(j) {
                *v *= s;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        let mut out = vec![0.0; self.rows];
        for (j, &s) in x.iter().enumerate() {
            if s != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.column(j)) {
                    *o += s * a;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Dense complex matrix, column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn from_column_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Copy of the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> ComplexMatrix {
        assert!(!indices.is_empty(), "at least one column required");
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &j in indices {
            data.extend_from_slice(self.column(j));
        }
        ComplexMatrix::from_column_major(self.rows, indices.len(), data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        let mut out = vec![Complex64::ZERO; self.rows];
        for (j, &s) in x.iter().enumerate() {
            if s != Complex64::ZERO {
                for (o, &a) in out.iter_mut().zip(self.column(j)) {
                    *o += s * a;
                }
            }
        }
        out
    }

    /// `self^H * x` (conjugate-transpose application).
    pub fn herm_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows, "vector length must match row count");
        (0..self.cols)
            .map(|j| self.column(j).iter().zip(x).map(|(a, b)| a.conj() * b).sum())
            .collect()
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for l in 0..self.cols {
                let s = rhs[(l, j)];
                if s != Complex64::ZERO {
                    let a = self.column(l);
                    let c = out.column_mut(j);
                    for i in 0..a.len() {
                        c[i] += s * a[i];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.norm()))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Reduced SVD of a real matrix: `x ~ u * diag(sigma) * v^T`.
///
/// `sigma` is nonincreasing; `effective_rank` counts the values above
/// `RANK_CUTOFF * sigma[0]`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: RealMatrix,
    pub sigma: Vec<f64>,
    pub v: RealMatrix,
    pub effective_rank: usize,
}

pub(crate) fn norm2_complex(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = RealMatrix::from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = RealMatrix::from_row_major(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c[(0, 0)], 58.0);
        assert_eq!(c[(0, 1)], 64.0);
        assert_eq!(c[(1, 0)], 139.0);
        assert_eq!(c[(1, 1)], 154.0);
    }

    #[test]
    fn tr_matmul_matches_transpose_matmul() {
        let a = RealMatrix::from_row_major(3, 2, &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let b = RealMatrix::from_row_major(3, 2, &[7.0, 10.0, 8.0, 11.0, 9.0, 12.0]);
        let fast = a.tr_matmul(&b);
        let slow = a.transpose().matmul(&b);
        assert_eq!(fast, slow);
    }

    #[test]
    fn columns_range_copies_block() {
        let a = RealMatrix::from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = a.columns_range(1, 3);
        assert_eq!(b.cols(), 2);
        assert_eq!(b[(0, 0)], 2.0);
        assert_eq!(b[(1, 1)], 6.0);
    }

    #[test]
    fn complex_matvec() {
        let i = Complex64::new(0.0, 1.0);
        let m = ComplexMatrix::from_column_major(
            2,
            2,
            vec![Complex64::ONE, i, -i, Complex64::new(2.0, 0.0)],
        );
        let y = m.matvec(&[Complex64::ONE, Complex64::ONE]);
        assert_eq!(y[0], Complex64::new(1.0, -1.0));
        assert_eq!(y[1], Complex64::new(2.0, 1.0));
    }
}
