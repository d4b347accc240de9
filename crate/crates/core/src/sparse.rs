//! Compressed sparse row storage and the few products the GCN needs.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Borrowed sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Merge-join dot product, summed in ascending index order.
    pub fn dot(&self, other: &SparseRow<'_>) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Owned sparse vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// Builds from arbitrary (index, value) pairs; indices are sorted and
    /// duplicates summed. Explicit zeros are dropped.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut out = SparseVec::default();
        for (i, v) in pairs {
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        let (indices, values) = out
            .indices
            .into_iter()
            .zip(out.values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        SparseVec { indices, values }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let (indices, values) = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        SparseVec { indices, values }
    }

    pub fn view(&self) -> SparseRow<'_> {
        SparseRow {
            indices: &self.indices,
            values: &self.values,
        }
    }
}

/// Row-major CSR matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_rows(cols: usize, rows: Vec<SparseVec>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in &rows {
            debug_assert!(r.indices.iter().all(|&c| c < cols));
            indices.extend_from_slice(&r.indices);
            values.extend_from_slice(&r.values);
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(
            n,
            (0..n)
                .map(|i| SparseVec {
                    indices: vec![i],
                    values: vec![1.0],
                })
                .collect(),
        )
    }

    pub fn from_dense(m: ArrayView2<'_, f64>) -> Self {
        let rows = m
            .rows()
            .into_iter()
            .map(|r| SparseVec::from_dense(&r.to_vec()))
            .collect();
        Self::from_rows(m.ncols(), rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = SparseRow<'_>> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row(i);
        match r.indices.binary_search(&j) {
            Ok(k) => r.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for (i, r) in self.iter_rows().enumerate() {
            for (j, v) in r.iter() {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// `self · dense`.
    pub fn matmul(&self, dense: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.cols, dense.nrows(), "sparse matmul inner dimension");
        let mut out = Array2::zeros((self.rows, dense.ncols()));
        for (i, r) in self.iter_rows().enumerate() {
            let mut out_row = out.row_mut(i);
            for (k, v) in r.iter() {
                out_row.scaled_add(v, &dense.row(k));
            }
        }
        out
    }

    /// `selfᵀ · dense`.
    pub fn transpose_matmul(&self, dense: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.rows, dense.nrows(), "sparse transpose matmul inner dimension");
        let mut out = Array2::zeros((self.cols, dense.ncols()));
        for (i, r) in self.iter_rows().enumerate() {
            let src = dense.row(i);
            for (j, v) in r.iter() {
                out.row_mut(j).scaled_add(v, &src);
            }
        }
        out
    }

    /// Exact structural and numeric symmetry within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.iter_rows()
            .enumerate()
            .all(|(i, r)| r.iter().all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// Reorders rows and columns of a square matrix: `out[p[i], p[j]] = self[i, j]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut rows = vec![SparseVec::default(); self.rows];
        for (i, r) in self.iter_rows().enumerate() {
            rows[perm[i]] = SparseVec::from_pairs(r.iter().map(|(j, v)| (perm[j], v)).collect());
        }
        Self::from_rows(self.cols, rows)
    }

    /// Reorders rows only: `out[p[i]] = self[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut rows = vec![SparseVec::default(); self.rows];
        for (i, r) in self.iter_rows().enumerate() {
            rows[perm[i]] = SparseVec {
                indices: r.indices.to_vec(),
                values: r.values.to_vec(),
            };
        }
        Self::from_rows(self.cols, rows)
    }
}
