//! Backward-Euler finite-element assembly of the all-at-once space-time system.
//!
//! Row block `n >= 1` of the Neumann operator holds `C/dt + K` on the diagonal and
//! `-C/dt` on the sub-diagonal. Fixed degrees of freedom (node 0 at every time point
//! and every node of time point 0) are eliminated by `J = B J_neu B + W (I - B)`.

use crate::error::{invalid, Result};
use crate::mesh::SpaceTimeGrid;
use crate::sparse::SparseMatrix;

pub type Matrix2 = [[f64; 2]; 2];

/// Element conductivity and consistent capacity matrices for linear shape functions.
pub fn element_matrices(k: f64, c: f64, dx: f64) -> Result<(Matrix2, Matrix2)> {
    for (name, v) in [("k", k), ("c", c), ("dx", dx)] {
        if !(v > 0.0) {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    let a = k / dx;
    let m = c * dx / 6.0;
    Ok(([[a, -a], [-a, a]], [[2.0 * m, m], [m, 2.0 * m]]))
}

/// Symmetric tridiagonal spatial matrix: `diag[i]` and `upper[i]` = entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tridiagonal {
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    fn add_element(&mut self, e: usize, m: &Matrix2) {
        self.diag[e] += m[0][0];
        self.diag[e + 1] += m[1][1];
        self.upper[e] += m[0][1];
    }

    fn to_sparse(&self) -> SparseMatrix {
        let n = self.diag.len();
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            t.push((i, i, self.diag[i]));
            if i + 1 < n {
                t.push((i, i + 1, self.upper[i]));
                t.push((i + 1, i, self.upper[i]));
            }
        }
        SparseMatrix::from_triplets(n, n, t).expect("indices in range")
    }
}

pub(crate) fn spatial_tridiagonals(grid: &SpaceTimeGrid) -> Result<(Tridiagonal, Tridiagonal)> {
    let mat = grid.materials()?;
    let mut k = Tridiagonal::zeros(grid.n_nodes());
    let mut c = Tridiagonal::zeros(grid.n_nodes());
    for e in 0..grid.n_el() {
        let (ke, ce) = element_matrices(mat.conductivity[e], mat.capacity[e], grid.dx())?;
        k.add_element(e, &ke);
        c.add_element(e, &ce);
    }
    Ok((k, c))
}

/// Spatial conductivity and capacity matrices `(K, C)` without boundary conditions.
pub fn assemble_spatial(grid: &SpaceTimeGrid) -> Result<(SparseMatrix, SparseMatrix)> {
    let (k, c) = spatial_tridiagonals(grid)?;
    Ok((k.to_sparse(), c.to_sparse()))
}

/// Weight on the rows of fixed degrees of freedom, sized like the largest
/// coefficients of the level's operator.
pub fn w_diri(grid: &SpaceTimeGrid) -> Result<f64> {
    let mat = grid.materials()?;
    let c_max = mat.capacity.iter().cloned().fold(f64::MIN, f64::max);
    let k_max = mat.conductivity.iter().cloned().fold(f64::MIN, f64::max);
    Ok(c_max * grid.dx() / grid.dt() + k_max / grid.dx())
}

/// Imposed heat load (W/m^3) at element centre `x` and time `t`.
pub fn heat_load_value(x: f64, t: f64, length: f64, final_time: f64) -> f64 {
    let sx = x / length - 0.5;
    let st = t / final_time - 0.5;
    (1.0 + (200.0 * (sx * sx + st * st)).cos()) * 1e6
}

/// Nodal load from the element-constant heat load, before Dirichlet masking.
/// Time point 0 carries no load.
pub fn load_vector(grid: &SpaceTimeGrid) -> Vec<f64> {
    let mut b = vec![0.0; grid.n_dofs()];
    let half = grid.dx() / 2.0;
    for n in 1..=grid.n_t() {
        let t = grid.time(n);
        for e in 0..grid.n_el() {
            let q = heat_load_value(grid.element_centre(e), t, grid.length(), grid.final_time());
            b[grid.dof(n, e)] += q * half;
            b[grid.dof(n, e + 1)] += q * half;
        }
    }
    b
}

/// `true` for fixed degrees of freedom: `x = 0` at every time point and the initial time.
pub fn dirichlet_mask(grid: &SpaceTimeGrid) -> Vec<bool> {
    (0..grid.n_dofs())
        .map(|idx| {
            let (n, i) = grid.unflatten(idx);
            n == 0 || i == 0
        })
        .collect()
}

/// One level's linear system `J u = b`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub w_diri: f64,
    pub dirichlet_mask: Vec<bool>,
}

impl AssembledSystem {
    pub fn n_dofs(&self) -> usize {
        self.matrix.n_rows()
    }

    /// The adjoint system: transposed matrix, same mask and weight, given right-hand side.
    pub fn transposed_with_rhs(&self, rhs: Vec<f64>) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            rhs,
            w_diri: self.w_diri,
            dirichlet_mask: self.dirichlet_mask.clone(),
        }
    }
}

/// Builds `J` and the masked load `b` for a grid with materials.
pub fn assemble_system(grid: &SpaceTimeGrid) -> Result<AssembledSystem> {
    let matrix = assemble_matrix(grid)?;
    let w = w_diri(grid)?;
    let mask = dirichlet_mask(grid);
    let mut rhs = load_vector(grid);
    for (b, &fixed) in rhs.iter_mut().zip(&mask) {
        if fixed {
            *b = 0.0;
        }
    }
    Ok(AssembledSystem {
        matrix,
        rhs,
        w_diri: w,
        dirichlet_mask: mask,
    })
}

fn assemble_matrix(grid: &SpaceTimeGrid) -> Result<SparseMatrix> {
    let (k, c) = spatial_tridiagonals(grid)?;
    let w = w_diri(grid)?;
    let inv_dt = 1.0 / grid.dt();
    let nodes = grid.n_nodes();
    let mut t = Vec::with_capacity(6 * grid.n_dofs());
    for n in 0..=grid.n_t() {
        for i in 0..nodes {
            let row = grid.dof(n, i);
            if n == 0 || i == 0 {
                t.push((row, row, w));
                continue;
            }
            // Current time level: C/dt + K, columns j >= 1 only.
            for j in i.saturating_sub(1).max(1)..=(i + 1).min(nodes - 1) {
                let (kv, cv) = tri_entry(&k, &c, i, j);
                t.push((row, grid.dof(n, j), cv * inv_dt + kv));
            }
            // Previous time level: -C/dt; time level 0 is fixed.
            if n >= 2 {
                for j in i.saturating_sub(1).max(1)..=(i + 1).min(nodes - 1) {
                    let (_, cv) = tri_entry(&k, &c, i, j);
                    t.push((row, grid.dof(n - 1, j), -cv * inv_dt));
                }
            }
        }
    }
    SparseMatrix::from_triplets(grid.n_dofs(), grid.n_dofs(), t)
}

#[inline]
fn tri_entry(k: &Tridiagonal, c: &Tridiagonal, i: usize, j: usize) -> (f64, f64) {
    if i == j {
        (k.diag[i], c.diag[i])
    } else {
        let e = i.min(j);
        (k.upper[e], c.upper[e])
    }
}
