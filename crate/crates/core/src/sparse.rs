//! Immutable nonnegative sparse matrices in CSR layout.
//!
//! Only the kernels the solver needs are provided: products with a vector and
//! its transpose, row ℓ1 norms, the ∞→∞ operator norm and the row width.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Nonnegative CSR matrix. Every stored value is strictly positive and column
/// indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from unordered `(row, col, value)` triplets.
    ///
    /// Duplicate cells are summed and cells whose sum is zero are dropped.
    /// Negative or non-finite values and out-of-range indices are rejected.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (row, col, value) in triplets {
            if row >= nrows || col >= ncols {
                return Err(Error::Entry {
                    row,
                    col,
                    reason: "index out of range",
                });
            }
            if !value.is_finite() {
                return Err(Error::Entry {
                    row,
                    col,
                    reason: "value is not finite",
                });
            }
            if value < 0.0 {
                return Err(Error::Entry {
                    row,
                    col,
                    reason: "value is negative",
                });
            }
            entries.push((row, col, value));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(entries.len());
        for (row, col, value) in entries {
            if last == Some((row, col)) {
                *values.last_mut().expect("duplicate follows an entry") += value;
            } else {
                col_idx.push(col);
                values.push(value);
                rows_of.push(row);
                last = Some((row, col));
            }
        }
        // drop explicit zeros after summation
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((row, col), value) in rows_of.into_iter().zip(col_idx).zip(values) {
            if value > 0.0 {
                row_ptr[row + 1] += 1;
                keep_cols.push(col);
                keep_vals.push(value);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        })
    }

    /// Builds a matrix from dense rows, each of length `ncols`.
    pub fn from_dense<R: AsRef<[f64]>>(ncols: usize, rows: &[R]) -> Result<Self> {
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            check_len("dense row", ncols, row.len())?;
            triplets.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
        }
        Self::from_triplets(rows.len(), ncols, triplets)
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                col_idx[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            col_idx.extend_from_slice(&self.col_idx[range.clone()]);
            values.extend_from_slice(&self.values[range]);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: rows.len(),
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<Self> {
        check_len("vstack columns", self.ncols, other.ncols)?;
        let mut row_ptr = self.row_ptr.clone();
        let offset = self.nnz();
        row_ptr.extend(other.row_ptr[1..].iter().map(|&k| k + offset));
        let mut col_idx = self.col_idx.clone();
        col_idx.extend_from_slice(&other.col_idx);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            nrows: self.nrows + other.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec input", self.ncols, x.len())?;
        let mut out = vec![0.0; self.nrows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀ y`.
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec_transpose input", self.nrows, y.len())?;
        let mut out = vec![0.0; self.ncols];
        self.matvec_transpose_into(y, &mut out);
        Ok(out)
    }

    pub(crate) fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.col_idx[range.clone()]
                .iter()
                .zip(&self.values[range])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub(crate) fn matvec_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[k]] += self.values[k] * yi;
            }
        }
    }

    pub fn row_l1_norms(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v).sum())
            .collect()
    }

    /// `‖A‖∞→∞`, the largest row sum; zero for a matrix without entries.
    pub fn inf_operator_norm(&self) -> f64 {
        self.row_l1_norms().into_iter().fold(0.0, f64::max)
    }

    /// Largest number of stored entries in any row.
    pub fn width(&self) -> usize {
        (0..self.nrows).map(|i| self.row_nnz(i)).max().unwrap_or(0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Tally of sparse kernel work, in matrix-vector products and in scalar
/// multiply-adds over stored entries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounter {
    pub matvecs: u64,
    pub multiply_adds: u64,
}

impl WorkCounter {
    pub fn record(&mut self, a: &SparseMatrix) {
        self.matvecs += 1;
        self.multiply_adds += a.nnz() as u64;
    }

    pub fn absorb(&mut self, other: &WorkCounter) {
        self.matvecs += other.matvecs;
        self.multiply_adds += other.multiply_adds;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_product(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        rows.iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn identity_matvec() {
        let a = SparseMatrix::identity(2);
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(a.matvec_transpose(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn single_entry_matvec() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, 0.5)]).unwrap();
        assert_eq!(a.matvec(&[7.0, 2.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn row_vector_transpose() {
        let a = SparseMatrix::from_dense(3, &[vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(a.matvec_transpose(&[2.0]).unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn dense_oracle_4x3() {
        let rows = vec![
            vec![0.3, 0.0, 1.2],
            vec![0.0, 0.0, 0.0],
            vec![2.5, 0.7, 0.0],
            vec![0.1, 0.2, 0.4],
        ];
        let a = SparseMatrix::from_dense(3, &rows).unwrap();
        let x = [1.5, -2.0, 0.25];
        assert_eq!(a.matvec(&x).unwrap(), dense_product(&rows, &x));
        let y = [1.0, 3.0, -0.5, 2.0];
        let expected: Vec<f64> = (0..3)
            .map(|j| (0..4).map(|i| rows[i][j] * y[i]).sum())
            .collect();
        let got = a.matvec_transpose(&y).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
        let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(a.row_l1_norms(), sums);
        assert_eq!(a.inf_operator_norm(), 3.2);
        assert_eq!(a.width(), 3);
    }

    #[test]
    fn norms_and_width() {
        assert_eq!(SparseMatrix::identity(3).row_l1_norms(), vec![1.0; 3]);
        assert_eq!(SparseMatrix::identity(3).inf_operator_norm(), 1.0);
        assert_eq!(SparseMatrix::identity(4).width(), 1);
        let row = SparseMatrix::from_dense(3, &[[0.5, 0.5, 1.0]]).unwrap();
        assert_eq!(row.row_l1_norms(), vec![2.0]);
        let two = SparseMatrix::from_dense(2, &[[1.5, 0.5], [0.0, 0.5]]).unwrap();
        assert_eq!(two.inf_operator_norm(), 2.0);
        let wide = SparseMatrix::from_dense(5, &[[1.0; 5]]).unwrap();
        assert_eq!(wide.width(), 5);
        assert_eq!(SparseMatrix::zeros(3, 2).inf_operator_norm(), 0.0);
    }

    #[test]
    fn duplicates_summed_zeros_dropped() {
        let a = SparseMatrix::from_triplets(
            2,
            3,
            [(1, 2, 0.25), (0, 1, 0.0), (1, 2, 0.5), (0, 0, 1.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 2), 0.75);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.row_ptr(), &[0, 1, 2]);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(SparseMatrix::from_triplets(1, 1, [(0, 0, -1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(1, 1, [(0, 1, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(1, 1, [(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn shape_errors() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(a.matvec(&[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(
            a.matvec_transpose(&[1.0, 2.0, 3.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn transpose_and_stack() {
        let a = SparseMatrix::from_dense(3, &[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]).unwrap();
        let t = a.transpose();
        assert_eq!(t.nrows(), 3);
        assert_eq!(t.get(2, 0), 2.0);
        assert_eq!(t.get(1, 1), 3.0);
        assert_eq!(t.transpose(), a);
        let s = a.vstack(&SparseMatrix::identity(3)).unwrap();
        assert_eq!(s.nrows(), 5);
        assert_eq!(s.get(4, 2), 1.0);
        assert_eq!(s.select_rows(&[0, 1]), a);
    }
}
