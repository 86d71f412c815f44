//! Minimal row-major dense and CSR sparse matrices.
//!
//! Training code is written against [`Design`], so the same logistic
//! regression runs on standardized ratios (dense) and TF-IDF vectors (sparse).
//! Missing values in a [`DenseMatrix`] are stored as `NaN`.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Row access needed by first-order training loops.
pub trait Design {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `x_i · w`
    fn row_dot(&self, row: usize, w: &[f64]) -> f64;
    /// `out += alpha * x_i`
    fn row_axpy(&self, row: usize, alpha: f64, out: &mut [f64]);
    /// True when every stored value is finite.
    fn all_finite(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix shape mismatch");
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// New matrix made of the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }
}

impl Design for DenseMatrix {
    fn n_rows(&self) -> usize {
        self.rows
    }

    fn n_cols(&self) -> usize {
        self.cols
    }

    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        self.row(row).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn row_axpy(&self, row: usize, alpha: f64, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(self.row(row)) {
            *o += alpha * x;
        }
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A sparse vector as parallel (sorted column index, value) lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn get(&self, col: usize) -> f64 {
        match self.indices.binary_search(&col) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_rows(rows: &[SparseVec], cols: usize) -> Self {
        let nnz = rows.iter().map(SparseVec::nnz).sum();
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for r in rows {
            debug_assert!(r.indices.iter().all(|&c| c < cols));
            indices.extend_from_slice(&r.indices);
            values.extend_from_slice(&r.values);
            indptr.push(indices.len());
        }
        Self { cols, indptr, indices, values }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(idx.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &i in idx {
            let (c, v) = self.row(i);
            indices.extend_from_slice(c);
            values.extend_from_slice(v);
            indptr.push(indices.len());
        }
        Self { cols: self.cols, indptr, indices, values }
    }

    /// `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows()).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&c, &v)| (i, c, v))
        })
    }
}

impl Design for SparseMatrix {
    fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    fn n_cols(&self) -> usize {
        self.cols
    }

    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        let (c, v) = self.row(row);
        c.iter().zip(v).map(|(&j, x)| w[j] * x).sum()
    }

    fn row_axpy(&self, row: usize, alpha: f64, out: &mut [f64]) {
        let (c, v) = self.row(row);
        for (&j, x) in c.iter().zip(v) {
            out[j] += alpha * x;
        }
    }

    fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_agree() {
        let dense = DenseMatrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]);
        let sparse = SparseMatrix::from_rows(
            &[
                SparseVec { indices: vec![0, 2], values: vec![1.0, 2.0] },
                SparseVec { indices: vec![1], values: vec![3.0] },
            ],
            3,
        );
        let w = [0.5, -1.0, 2.0];
        for i in 0..2 {
            assert_eq!(dense.row_dot(i, &w), sparse.row_dot(i, &w));
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            dense.row_axpy(i, 2.0, &mut a);
            sparse.row_axpy(i, 2.0, &mut b);
            assert_eq!(a, b);
        }
        let picked = sparse.select_rows(&[1, 1, 0]);
        assert_eq!(picked.n_rows(), 3);
        assert_eq!(picked.triplets().count(), 4);
    }
}
