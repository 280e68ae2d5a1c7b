//! Brute-force reference implementations for tests.
//!
//! Nothing here goes through the all-at-once assembly or the multigrid solver: the
//! forward problem is integrated step by step with a tridiagonal solve, sharing only
//! `element_matrices` and the heat load function.

use std::time::Instant;

use crate::assembly::{element_matrices, heat_load_value};
use crate::error::{invalid, Error, Result};
use crate::materials::MaterialPair;
use crate::mesh::{ElementMaterials, SpaceTimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub n_el: usize,
    pub n_t: usize,
    pub seconds: f64,
}

/// Temperatures from sequential backward-Euler steps, flattened time-major.
pub fn timestep_solve(grid: &SpaceTimeGrid) -> Result<OracleResult<Vec<f64>>> {
    let start = Instant::now();
    let mats = grid.materials()?;
    let nodes = grid.n_el() + 1;
    let (dx, dt) = (grid.dx(), grid.dt());

    // (C/dt + K) restricted to nodes 1..=n_el; node 0 is held at zero.
    let mut a_diag = vec![0.0; nodes];
    let mut a_off = vec![0.0; nodes];
    let mut c_diag = vec![0.0; nodes];
    let mut c_off = vec![0.0; nodes];
    for e in 0..grid.n_el() {
        let (ke, ce) = element_matrices(mats.conductivity[e], mats.capacity[e], dx)?;
        for a in 0..2 {
            a_diag[e + a] += ce[a][a] / dt + ke[a][a];
            c_diag[e + a] += ce[a][a] / dt;
        }
        a_off[e] += ce[0][1] / dt + ke[0][1];
        c_off[e] += ce[0][1] / dt;
    }

    let mut u = vec![0.0; grid.n_dofs()];
    let mut prev = vec![0.0; nodes];
    let mut rhs = vec![0.0; nodes];
    for n in 1..=grid.n_t() {
        let t = n as f64 * dt;
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..grid.n_el() {
            let x = (e as f64 + 0.5) * dx;
            let q = heat_load_value(x, t, grid.length(), grid.final_time()) * dx / 2.0;
            rhs[e] += q;
            rhs[e + 1] += q;
        }
        for i in 1..nodes {
            let mut s = c_diag[i] * prev[i];
            if i > 1 {
                s += c_off[i - 1] * prev[i - 1];
            }
            if i + 1 < nodes {
                s += c_off[i] * prev[i + 1];
            }
            rhs[i] += s;
        }
        let step = thomas(&a_diag[1..], &a_off[1..nodes - 1], &rhs[1..])?;
        prev[0] = 0.0;
        prev[1..].copy_from_slice(&step);
        u[n * nodes..(n + 1) * nodes].copy_from_slice(&prev);
    }
    Ok(OracleResult {
        value: u,
        n_el: grid.n_el(),
        n_t: grid.n_t(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Symmetric tridiagonal solve with diagonal `d` and off-diagonal `e`.
fn thomas(d: &[f64], e: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let m = d.len();
    let mut cp = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut denom = d[0];
    if denom == 0.0 {
        return Err(Error::ZeroDiagonal(0));
    }
    x[0] = b[0] / denom;
    for i in 1..m {
        cp[i - 1] = e[i - 1] / denom;
        denom = d[i] - e[i - 1] * cp[i - 1];
        if denom == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        x[i] = (b[i] - e[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

const OBJECTIVE_SCALE: f64 = 1e6;

/// Scaled thermal compliance of a step-by-step solution.
pub fn objective(grid: &SpaceTimeGrid, u: &[f64]) -> f64 {
    let (dx, dt) = (grid.dx(), grid.dt());
    let nodes = grid.n_el() + 1;
    let mut total = 0.0;
    for n in 1..=grid.n_t() {
        let t = n as f64 * dt;
        for e in 0..grid.n_el() {
            let x = (e as f64 + 0.5) * dx;
            let q = heat_load_value(x, t, grid.length(), grid.final_time()) * dx / 2.0;
            total += q * (u[n * nodes + e] + u[n * nodes + e + 1]);
        }
    }
    total * dt / OBJECTIVE_SCALE
}

// Even in chi, so the slope at chi = 0 stays zero for p > 1.
fn penalised(chi: f64, lo: f64, hi: f64, p: f64) -> f64 {
    lo + (hi - lo) * chi.abs().powf(p)
}

/// Central finite differences of the objective with respect to each design variable.
/// Perturbed designs may leave `[0, 1]` slightly; below zero the interpolation is
/// mirrored.
pub fn fd_gradient(
    geometry: &SpaceTimeGrid,
    design: &[f64],
    mat: &MaterialPair,
    step: f64,
) -> Result<OracleResult<Vec<f64>>> {
    if design.len() != geometry.n_el() {
        return Err(invalid("design", "length differs from the element count"));
    }
    if !(step > 0.0) {
        return Err(invalid("step", "must be positive"));
    }
    let start = Instant::now();
    let theta = |chi: &[f64]| -> Result<f64> {
        let m = ElementMaterials {
            conductivity: chi.iter().map(|&x| penalised(x, mat.k_ins, mat.k_con, mat.p_k)).collect(),
            capacity: chi.iter().map(|&x| penalised(x, mat.c_ins, mat.c_con, mat.p_c)).collect(),
        };
        let g = geometry.clone().with_materials(m)?;
        let u = timestep_solve(&g)?.value;
        Ok(objective(&g, &u))
    };
    let mut grad = Vec::with_capacity(design.len());
    let mut chi = design.to_vec();
    for e in 0..design.len() {
        chi[e] = design[e] + step;
        let plus = theta(&chi)?;
        chi[e] = design[e] - step;
        let minus = theta(&chi)?;
        chi[e] = design[e];
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(OracleResult {
        value: grad,
        n_el: geometry.n_el(),
        n_t: geometry.n_t(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Minimum of `f` over a uniform `points x points` grid on a box, as `(x, f(x))`.
pub fn grid_search_2d(
    f: impl Fn(f64, f64) -> Option<f64>,
    lower: [f64; 2],
    upper: [f64; 2],
    points: usize,
) -> Option<([f64; 2], f64)> {
    let mut best: Option<([f64; 2], f64)> = None;
    let at = |j: usize, d: usize| lower[d] + (upper[d] - lower[d]) * j as f64 / (points - 1) as f64;
    for a in 0..points {
        for b in 0..points {
            let x = [at(a, 0), at(b, 1)];
            if let Some(v) = f(x[0], x[1]) {
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((x, v));
                }
            }
        }
    }
    best
}
