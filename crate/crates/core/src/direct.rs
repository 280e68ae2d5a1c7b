//! Banded LU factorisation for the coarsest level.
//!
//! Rows are stored in windows `[r - kl, r + kl + ku]` so that row interchanges within
//! the band never overflow. Pivoting uses a threshold rule: the diagonal is kept when
//! it is within `PIVOT_THRESHOLD` of the column maximum, which leaves the band of
//! diagonally dominant systems untouched.

use crate::error::{Error, Result};
use crate::mesh::SpaceTimeGrid;
use crate::sparse::SparseMatrix;

pub const PIVOT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    // L multipliers by column, `kl` per column, so the forward sweep reads contiguously.
    lower: Vec<f64>,
    // Last column of each row of U.
    upper_end: Vec<usize>,
}

impl BandedLu {
    pub fn factor(matrix: &SparseMatrix) -> Result<Self> {
        let n = matrix.n_rows();
        if matrix.n_cols() != n {
            return Err(Error::DimensionMismatch("LU needs a square matrix".into()));
        }
        let (kl, ku) = matrix.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            lower: Vec::new(),
            upper_end: Vec::new(),
        };
        for (r, c, v) in matrix.triplets() {
            let at = lu.at(r, c);
            lu.data[at] = v;
        }
        lu.eliminate()?;
        lu.compact();
        Ok(lu)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + c + self.kl - r
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut ju = 0usize;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut max = 0.0f64;
            for i in k..=last_row {
                let v = self.data[self.at(i, k)].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max == 0.0 || !max.is_finite() {
                return Err(Error::SingularMatrix { column: k, pivot: max });
            }
            if self.data[self.at(k, k)].abs() >= PIVOT_THRESHOLD * max {
                p = k;
            }
            self.pivots[k] = p;
            ju = ju.max((p + ku).min(n - 1)).max(k);
            if p != k {
                for j in k..=ju {
                    let (a, b) = (self.at(k, j), self.at(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.at(k, k)];
            let k_row = k * self.width + self.kl - k;
            for i in k + 1..=last_row {
                let ik = self.at(i, k);
                let l = self.data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[ik] = l;
                let i_row = i * self.width + self.kl - i;
                for j in k + 1..=ju {
                    self.data[i_row + j] -= l * self.data[k_row + j];
                }
            }
        }
        Ok(())
    }

    fn compact(&mut self) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        self.lower = vec![0.0; n * kl];
        for k in 0..n {
            for i in k + 1..=(k + kl).min(n - 1) {
                self.lower[k * kl + i - k - 1] = self.data[self.at(i, k)];
            }
        }
        self.upper_end = (0..n)
            .map(|k| {
                let row = k * self.width + kl - k;
                (k..=(k + kl + ku).min(n - 1)).rev().find(|&j| self.data[row + j] != 0.0).unwrap_or(k)
            })
            .collect();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Number of row interchanges performed.
    pub fn n_swaps(&self) -> usize {
        self.pivots.iter().enumerate().filter(|(k, p)| *k != **p).count()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let m = self.kl.min(n - 1 - k);
                let col = &self.lower[k * self.kl..k * self.kl + m];
                for (bi, l) in b[k + 1..k + 1 + m].iter_mut().zip(col) {
                    *bi -= l * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let row = k * self.width + self.kl - k;
            let end = self.upper_end[k];
            let mut s = b[k];
            for (u, x) in self.data[row + k + 1..=row + end].iter().zip(&b[k + 1..=end]) {
                s -= u * x;
            }
            b[k] = s / self.data[row + k];
        }
    }
}

/// Maps space-major position `i (n_t + 1) + n` to the time-major index `n (n_el + 1) + i`.
pub fn space_major_permutation(grid: &SpaceTimeGrid) -> Vec<usize> {
    let mut perm = Vec::with_capacity(grid.n_dofs());
    for i in 0..grid.n_nodes() {
        for n in 0..grid.n_time_points() {
            perm.push(grid.dof(n, i));
        }
    }
    perm
}

/// Direct solver for the coarsest level. Chooses between time-major and space-major
/// ordering by the estimated elimination cost of the band.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    lu: BandedLu,
    perm: Option<Vec<usize>>,
}

fn band_cost(m: &SparseMatrix) -> usize {
    let (kl, ku) = m.bandwidth();
    kl * (ku + 1)
}

impl DirectSolver {
    pub fn new(matrix: &SparseMatrix, grid: &SpaceTimeGrid) -> Result<Self> {
        if matrix.n_rows() != grid.n_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, grid has {} unknowns",
                matrix.n_rows(),
                grid.n_dofs()
            )));
        }
        let perm = space_major_permutation(grid);
        let reordered = matrix.permuted(&perm)?;
        if band_cost(&reordered) < band_cost(matrix) {
            Ok(Self {
                lu: BandedLu::factor(&reordered)?,
                perm: Some(perm),
            })
        } else {
            Ok(Self {
                lu: BandedLu::factor(matrix)?,
                perm: None,
            })
        }
    }

    pub fn is_space_major(&self) -> bool {
        self.perm.is_some()
    }

    pub fn lu(&self) -> &BandedLu {
        &self.lu
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match &self.perm {
            None => {
                let mut x = b.to_vec();
                self.lu.solve_in_place(&mut x);
                x
            }
            Some(perm) => {
                let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
                self.lu.solve_in_place(&mut y);
                let mut x = vec![0.0; b.len()];
                for (r, &p) in perm.iter().enumerate() {
                    x[p] = y[r];
                }
                x
            }
        }
    }
}
