//! Compressed sparse row matrices.
//!
//! Everything the solver touches (system matrices, prolongation and restriction
//! operators) is stored in this one format. Rows keep their column indices sorted
//! and free of duplicates; explicitly stored zeros are allowed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= n_rows || *c >= n_cols) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
            )));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Stored value at `(r, c)`, zero when absent.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|r| self.get(r, r))
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn transpose(&self) -> Self {
        let mut row_ptr = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            row_ptr[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            row_ptr[c + 1] += row_ptr[c];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Row-major traversal keeps the transposed rows sorted.
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "matvec: input length");
        assert_eq!(y.len(), self.n_rows, "matvec: output length");
        for (r, yr) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let mut acc = 0.0;
            for (&c, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `out = b - A x`.
    pub fn residual_into(&self, b: &[f64], x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "residual: input length");
        assert_eq!(b.len(), self.n_rows, "residual: rhs length");
        assert_eq!(out.len(), self.n_rows, "residual: output length");
        for r in 0..self.n_rows {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let mut acc = b[r];
            for (&c, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                acc -= v * x[c];
            }
            out[r] = acc;
        }
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != rhs.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        // Dense accumulator over the output columns (Gustavson).
        let mut acc = vec![0.0; rhs.n_cols];
        let mut marker = vec![usize::MAX; rhs.n_cols];
        let mut pattern: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            pattern.clear();
            let (a_cols, a_vals) = self.row(r);
            for (&k, &a) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = rhs.row(k);
                for (&c, &b) in b_cols.iter().zip(b_vals) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                col_idx.push(c);
                values.push(acc[c]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: rhs.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Galerkin triple product `R J P`.
    pub fn triple_product(r: &SparseMatrix, j: &SparseMatrix, p: &SparseMatrix) -> Result<Self> {
        r.matmul(j)?.matmul(p)
    }

    /// Largest `|a_ij - b_ij|` over the union of both sparsity patterns.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - other.get(r, c)).abs());
        }
        for (r, c, v) in other.triplets() {
            worst = worst.max((v - self.get(r, c)).abs());
        }
        worst
    }

    /// Lower and upper bandwidth of the stored pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let (mut lower, mut upper) = (0, 0);
        for (r, c, _) in self.triplets() {
            if r > c {
                lower = lower.max(r - c);
            } else {
                upper = upper.max(c - r);
            }
        }
        (lower, upper)
    }

    /// `P A P^T` for the permutation `perm` (row `r` of the result is row `perm[r]` of `A`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if self.n_rows != self.n_cols || perm.len() != self.n_rows {
            return Err(Error::DimensionMismatch(
                "symmetric permutation needs a square matrix and a full permutation".into(),
            ));
        }
        let mut inverse = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            if old >= perm.len() || inverse[old] != usize::MAX {
                return Err(Error::DimensionMismatch("not a permutation".into()));
            }
            inverse[old] = new;
        }
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets().map(|(r, c, v)| (inverse[r], inverse[c], v)),
        )
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }
}

/// Euclidean norm with a fixed left-to-right summation order.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
