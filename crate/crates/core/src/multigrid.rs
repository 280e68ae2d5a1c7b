//! Space-time multigrid V-cycle with damped Jacobi smoothing.

use std::fmt;

use crate::assembly::{assemble_system, AssembledSystem};
use crate::direct::DirectSolver;
use crate::error::{Error, Result};
use crate::materials::{DesignField, MaterialPair};
use crate::mesh::{ElementMaterials, SpaceTimeGrid};
use crate::rediscretisation::{coarse_system, coarsen_materials, ReassemblyMethod, RediscretisationMethod};
use crate::sparse::{norm2, SparseMatrix};
use crate::strategy::CoarseningPath;
use crate::transfer::TransferPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub omega: f64,
    pub tolerance: f64,
    pub divergence_threshold: f64,
    pub max_cycles: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pre_smooth: 5,
            post_smooth: 5,
            omega: 0.5,
            tolerance: 1e-9,
            divergence_threshold: 1e9,
            max_cycles: 100,
        }
    }
}

impl SolverConfig {
    pub fn with_smoothing(mut self, nu: usize) -> Self {
        self.pre_smooth = nu;
        self.post_smooth = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(crate::error::invalid("omega", "must lie in (0, 1]"));
        }
        if !(self.tolerance > 0.0) || !(self.divergence_threshold > self.tolerance) {
            return Err(crate::error::invalid("tolerance", "need 0 < tolerance < divergence threshold"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    Diverged,
    MaxCycles,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Diverged => "diverged",
            Self::MaxCycles => "max_cycles",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub status: SolveStatus,
    pub cycles: usize,
    /// `r_0, r_1, ..., r_cycles`.
    pub residual_history: Vec<f64>,
    /// `(r_N / r_0)^(1/N)`; `None` when no cycle was run.
    pub convergence_factor: Option<f64>,
    /// Residuals are absolute because the right-hand side vanished.
    pub absolute_residual: bool,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds r_0")
    }

    /// Residual history as CSV rows `cycle,residual`.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("cycle,residual\n");
        for (n, r) in self.residual_history.iter().enumerate() {
            s.push_str(&format!("{n},{r}\n"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub grid: SpaceTimeGrid,
    pub system: AssembledSystem,
    pub design: Option<DesignField>,
    inv_diag: Vec<f64>,
}

impl Level {
    fn new(grid: SpaceTimeGrid, system: AssembledSystem, design: Option<DesignField>) -> Result<Self> {
        let inv_diag = inverse_diagonal(&system.matrix)?;
        Ok(Self {
            grid,
            system,
            design,
            inv_diag,
        })
    }
}

fn inverse_diagonal(m: &SparseMatrix) -> Result<Vec<f64>> {
    m.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| if d == 0.0 { Err(Error::ZeroDiagonal(i)) } else { Ok(1.0 / d) })
        .collect()
}

/// Levels, fixed transfer operators and the factorised coarsest operator.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    transfers: Vec<TransferPair>,
    method: RediscretisationMethod,
    path: CoarseningPath,
    material_pair: Option<MaterialPair>,
    coarse_solver: DirectSolver,
}

impl Hierarchy {
    /// `fine` must carry its materials. The design and material pair are required by
    /// design-averaging reassembly only.
    pub fn build(
        fine: &SpaceTimeGrid,
        design: Option<&DesignField>,
        material_pair: Option<&MaterialPair>,
        path: &CoarseningPath,
        method: RediscretisationMethod,
    ) -> Result<Self> {
        let mut grids = vec![fine.clone()];
        let mut transfers = Vec::with_capacity(path.directions.len());
        for &dir in &path.directions {
            let g = grids.last().unwrap();
            let coarse = g.coarsen(dir)?;
            transfers.push(TransferPair::build(g, &coarse, dir, method.interp)?);
            grids.push(coarse);
        }
        let levels = build_levels(grids, &transfers, design, material_pair, method.reassembly)?;
        let coarse_solver = factor_coarsest(&levels)?;
        Ok(Self {
            levels,
            transfers,
            method,
            path: path.clone(),
            material_pair: material_pair.copied(),
            coarse_solver,
        })
    }

    /// Rebuilds every level operator for new fine materials, keeping the path and
    /// the transfer operators.
    pub fn reassemble(&mut self, materials: ElementMaterials, design: Option<&DesignField>) -> Result<()> {
        let mut grids: Vec<SpaceTimeGrid> = self.levels.iter().map(|l| l.grid.clone()).collect();
        grids[0].set_materials(materials)?;
        self.levels = build_levels(grids, &self.transfers, design, self.material_pair.as_ref(), self.method.reassembly)?;
        self.coarse_solver = factor_coarsest(&self.levels)?;
        Ok(())
    }

    /// The hierarchy for `J^T`: every level operator transposed, transfers unchanged.
    pub fn adjoint(&self) -> Result<Self> {
        let levels = self
            .levels
            .iter()
            .map(|l| {
                let sys = l.system.transposed_with_rhs(vec![0.0; l.system.n_dofs()]);
                Level::new(l.grid.clone(), sys, l.design.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        let coarse_solver = factor_coarsest(&levels)?;
        Ok(Self {
            levels,
            transfers: self.transfers.clone(),
            method: self.method,
            path: self.path.clone(),
            material_pair: self.material_pair,
            coarse_solver,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn transfers(&self) -> &[TransferPair] {
        &self.transfers
    }

    pub fn path(&self) -> &CoarseningPath {
        &self.path
    }

    pub fn method(&self) -> RediscretisationMethod {
        self.method
    }

    pub fn fine(&self) -> &Level {
        &self.levels[0]
    }

    pub fn coarse_solver(&self) -> &DirectSolver {
        &self.coarse_solver
    }

    /// Solves `J u = rhs` on the finest level, starting from `initial` (zero if absent).
    pub fn solve(&self, rhs: &[f64], initial: Option<&[f64]>, cfg: &SolverConfig) -> Result<SolveReport> {
        cfg.validate()?;
        let n = self.levels[0].system.n_dofs();
        if rhs.len() != n || initial.is_some_and(|u| u.len() != n) {
            return Err(Error::DimensionMismatch(format!("system has {n} unknowns")));
        }
        let mut u = initial.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let b_norm = norm2(rhs);
        let absolute = b_norm == 0.0;
        let scale = if absolute { 1.0 } else { b_norm };
        let mut ws = Workspace::new(&self.levels);
        let fine = &self.levels[0].system.matrix;

        let residual = |u: &[f64], buf: &mut Vec<f64>| {
            fine.residual_into(rhs, u, buf);
            norm2(buf) / scale
        };
        let mut scratch = vec![0.0; n];
        let mut history = vec![residual(&u, &mut scratch)];
        let status = loop {
            let r = *history.last().unwrap();
            if r < cfg.tolerance {
                break SolveStatus::Converged;
            }
            if r.is_nan() || r > cfg.divergence_threshold {
                break SolveStatus::Diverged;
            }
            if history.len() > cfg.max_cycles {
                break SolveStatus::MaxCycles;
            }
            self.vcycle(0, rhs, &mut u, cfg, &mut ws);
            history.push(residual(&u, &mut scratch));
        };
        let cycles = history.len() - 1;
        let convergence_factor = convergence_factor(&history).ok();
        Ok(SolveReport {
            solution: u,
            status,
            cycles,
            residual_history: history,
            convergence_factor,
            absolute_residual: absolute,
        })
    }

    /// One V-cycle on the finest level from the guess `u`.
    pub fn v_cycle(&self, rhs: &[f64], u: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
        let n = self.levels[0].system.n_dofs();
        if rhs.len() != n || u.len() != n {
            return Err(Error::DimensionMismatch(format!("system has {n} unknowns")));
        }
        let mut u = u.to_vec();
        self.vcycle(0, rhs, &mut u, cfg, &mut Workspace::new(&self.levels));
        Ok(u)
    }

    /// Solves with the finest level's own right-hand side.
    pub fn solve_own_rhs(&self, initial: Option<&[f64]>, cfg: &SolverConfig) -> Result<SolveReport> {
        let rhs = self.levels[0].system.rhs.clone();
        self.solve(&rhs, initial, cfg)
    }

    fn vcycle(&self, l: usize, b: &[f64], u: &mut Vec<f64>, cfg: &SolverConfig, ws: &mut Workspace) {
        if l + 1 == self.levels.len() {
            *u = self.coarse_solver.solve(b);
            return;
        }
        let level = &self.levels[l];
        jacobi(level, b, u, &mut ws.tmp[l], cfg.omega, cfg.pre_smooth);

        let mut r = std::mem::take(&mut ws.residual[l]);
        level.system.matrix.residual_into(b, u, &mut r);
        let pair = &self.transfers[l];
        let mut rc = std::mem::take(&mut ws.rhs[l + 1]);
        pair.restriction.mul_vec_into(&r, &mut rc);
        if self.method.reassembly != ReassemblyMethod::Projection {
            for (v, &fixed) in rc.iter_mut().zip(&self.levels[l + 1].system.dirichlet_mask) {
                if fixed {
                    *v = 0.0;
                }
            }
        }
        let mut ec = std::mem::take(&mut ws.correction[l + 1]);
        ec.iter_mut().for_each(|v| *v = 0.0);
        self.vcycle(l + 1, &rc, &mut ec, cfg, ws);
        pair.prolongation.mul_vec_into(&ec, &mut r);
        for (ui, ei) in u.iter_mut().zip(&r) {
            *ui += ei;
        }
        ws.residual[l] = r;
        ws.rhs[l + 1] = rc;
        ws.correction[l + 1] = ec;

        jacobi(level, b, u, &mut ws.tmp[l], cfg.omega, cfg.post_smooth);
    }
}

fn build_levels(
    grids: Vec<SpaceTimeGrid>,
    transfers: &[TransferPair],
    design: Option<&DesignField>,
    material_pair: Option<&MaterialPair>,
    reassembly: ReassemblyMethod,
) -> Result<Vec<Level>> {
    let mut grids = grids.into_iter();
    let fine = grids.next().expect("at least the fine grid");
    let system = assemble_system(&fine)?;
    let mut levels = vec![Level::new(fine, system, design.cloned())?];
    for (mut coarse, pair) in grids.zip(transfers) {
        let prev = levels.last().unwrap();
        let cm = coarsen_materials(&prev.grid, pair.direction, reassembly, prev.design.as_ref(), material_pair)?;
        coarse.set_materials(cm.materials)?;
        let system = coarse_system(&prev.system, pair, &coarse, reassembly)?;
        levels.push(Level::new(coarse, system, cm.design)?);
    }
    Ok(levels)
}

fn factor_coarsest(levels: &[Level]) -> Result<DirectSolver> {
    let coarsest = levels.last().unwrap();
    DirectSolver::new(&coarsest.system.matrix, &coarsest.grid)
}

struct Workspace {
    tmp: Vec<Vec<f64>>,
    residual: Vec<Vec<f64>>,
    rhs: Vec<Vec<f64>>,
    correction: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(levels: &[Level]) -> Self {
        let buffers = || levels.iter().map(|l| vec![0.0; l.system.n_dofs()]).collect::<Vec<_>>();
        Self {
            tmp: buffers(),
            residual: buffers(),
            rhs: buffers(),
            correction: buffers(),
        }
    }
}

/// `steps` sweeps of damped Jacobi on `J u = b` starting from `u`.
pub fn jacobi_smooth(matrix: &SparseMatrix, u: &[f64], b: &[f64], omega: f64, steps: usize) -> Result<Vec<f64>> {
    let n = matrix.n_rows();
    if u.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!("system has {n} unknowns")));
    }
    let inv_diag = inverse_diagonal(matrix)?;
    let mut u = u.to_vec();
    let mut tmp = vec![0.0; n];
    jacobi_sweeps(matrix, &inv_diag, b, &mut u, &mut tmp, omega, steps);
    Ok(u)
}

/// `||J u - b|| / ||b||`, or the absolute norm (flagged) when `b` vanishes.
pub fn relative_residual(matrix: &SparseMatrix, u: &[f64], b: &[f64]) -> (f64, bool) {
    let mut r = vec![0.0; b.len()];
    matrix.residual_into(b, u, &mut r);
    let nb = norm2(b);
    if nb == 0.0 {
        (norm2(&r), true)
    } else {
        (norm2(&r) / nb, false)
    }
}

/// `(r_N / r_0)^(1/N)` over a residual history `r_0..r_N`.
pub fn convergence_factor(history: &[f64]) -> Result<f64> {
    match history {
        [] | [_] => Err(Error::EmptyHistory),
        [first, .., last] => Ok((last / first).powf(1.0 / (history.len() - 1) as f64)),
    }
}

fn jacobi(level: &Level, b: &[f64], u: &mut Vec<f64>, tmp: &mut Vec<f64>, omega: f64, nu: usize) {
    jacobi_sweeps(&level.system.matrix, &level.inv_diag, b, u, tmp, omega, nu);
}

/// `nu` sweeps of `u <- u + omega D^{-1} (b - J u)`, every entry updated from the
/// previous iterate.
fn jacobi_sweeps(m: &SparseMatrix, inv_diag: &[f64], b: &[f64], u: &mut Vec<f64>, tmp: &mut Vec<f64>, omega: f64, nu: usize) {
    for _ in 0..nu {
        for (r, next) in tmp.iter_mut().enumerate() {
            let (cols, vals) = m.row(r);
            let mut s = b[r];
            for (&c, &v) in cols.iter().zip(vals) {
                s -= v * u[c];
            }
            *next = u[r] + omega * inv_diag[r] * s;
        }
        std::mem::swap(u, tmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CoarseningDirection::*;
    use crate::transfer::InterpolationMethod;

    fn uniform(n: usize, t_t: f64) -> SpaceTimeGrid {
        SpaceTimeGrid::geometry(1.0, t_t, n, n)
            .unwrap()
            .with_materials(ElementMaterials::uniform(n, 1.0, 1.0))
            .unwrap()
    }

    fn ck() -> RediscretisationMethod {
        RediscretisationMethod::new(InterpolationMethod::Causal, ReassemblyMethod::Conductivity)
    }

    #[test]
    fn jacobi_hand_iteration() {
        let m = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 2.0)]).unwrap();
        assert_eq!(jacobi_smooth(&m, &[0.0], &[2.0], 0.5, 1).unwrap(), vec![0.5]);
        assert_eq!(jacobi_smooth(&m, &[0.3], &[2.0], 0.5, 0).unwrap(), vec![0.3]);
        assert_eq!(jacobi_smooth(&m, &[1.0], &[2.0], 0.5, 7).unwrap(), vec![1.0]);
        let z = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 0.0)]).unwrap();
        assert!(matches!(jacobi_smooth(&z, &[0.0], &[1.0], 0.5, 1), Err(Error::ZeroDiagonal(0))));
    }

    #[test]
    fn factor_arithmetic() {
        let mut h = vec![1.0; 31];
        h[30] = 1e-9;
        assert!((convergence_factor(&h).unwrap() - 0.50119).abs() < 1e-5);
        assert_eq!(convergence_factor(&[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(convergence_factor(&[1.0, 10.0]).unwrap(), 10.0);
        assert!(convergence_factor(&[1.0]).is_err());
    }

    #[test]
    fn residual_of_zero_guess_is_one() {
        let g = uniform(4, 0.1);
        let sys = assemble_system(&g).unwrap();
        assert_eq!(relative_residual(&sys.matrix, &vec![0.0; g.n_dofs()], &sys.rhs), (1.0, false));
        let zero = vec![0.0; g.n_dofs()];
        assert_eq!(relative_residual(&sys.matrix, &zero, &zero), (0.0, true));
    }

    #[test]
    fn single_level_is_a_direct_solve() {
        let g = uniform(8, 0.1);
        let h = Hierarchy::build(&g, None, None, &CoarseningPath::fixed(vec![]), ck()).unwrap();
        let rep = h.solve_own_rhs(None, &SolverConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert_eq!(rep.cycles, 1);
    }

    #[test]
    fn multilevel_converges_on_uniform_problem() {
        let g = uniform(32, 2f64.powi(-8));
        for path in ["t,t,t", "x,x,x", "f,f,f", "x,t,x"] {
            let path: CoarseningPath = path.parse().unwrap();
            let h = Hierarchy::build(&g, None, None, &path, ck()).unwrap();
            let rep = h.solve_own_rhs(None, &SolverConfig::default()).unwrap();
            assert_eq!(rep.status, SolveStatus::Converged, "{path}: {:?}", rep.residual_history);
            assert!(rep.convergence_factor.unwrap() < 1.0);
            let r = rep.residual_history.windows(2).all(|w| w[1].is_finite());
            assert!(r);
        }
    }

    #[test]
    fn converged_initial_guess_needs_no_cycle() {
        let g = uniform(16, 0.01);
        let h = Hierarchy::build(&g, None, None, &"x,t".parse().unwrap(), ck()).unwrap();
        let first = h.solve_own_rhs(None, &SolverConfig::default()).unwrap();
        let again = h.solve_own_rhs(Some(&first.solution), &SolverConfig::default()).unwrap();
        assert_eq!(again.cycles, 0);
        assert_eq!(again.status, SolveStatus::Converged);
        assert!(again.convergence_factor.is_none());
    }

    #[test]
    fn zero_rhs_uses_absolute_residual() {
        let g = uniform(8, 0.01);
        let h = Hierarchy::build(&g, None, None, &"x".parse().unwrap(), ck()).unwrap();
        let rep = h.solve(&vec![0.0; g.n_dofs()], None, &SolverConfig::default()).unwrap();
        assert!(rep.absolute_residual);
        assert_eq!(rep.cycles, 0);
    }

    #[test]
    fn cycle_budget_is_respected() {
        let g = uniform(32, 2f64.powi(-8));
        let h = Hierarchy::build(&g, None, None, &"x,x,x".parse().unwrap(), ck()).unwrap();
        let cfg = SolverConfig { max_cycles: 2, ..SolverConfig::default() };
        let rep = h.solve_own_rhs(None, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::MaxCycles);
        assert_eq!(rep.cycles, 2);
        assert_eq!(rep.residual_history.len(), 3);
    }

    #[test]
    fn adjoint_hierarchy_solves_transpose() {
        let g = uniform(16, 0.05);
        let h = Hierarchy::build(&g, None, None, &"t,x".parse().unwrap(), ck()).unwrap();
        let a = h.adjoint().unwrap();
        let rhs: Vec<f64> = (0..g.n_dofs()).map(|k| ((k * 7) % 11) as f64).collect();
        let rep = a.solve(&rhs, None, &SolverConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let jt = h.fine().system.matrix.transpose();
        let mut res = vec![0.0; rhs.len()];
        jt.residual_into(&rhs, &rep.solution, &mut res);
        assert!(norm2(&res) / norm2(&rhs) < 1e-9);
    }

    #[test]
    fn reassembly_matches_fresh_build() {
        let g = uniform(16, 0.05);
        let path: CoarseningPath = "x,t".parse().unwrap();
        let mut h = Hierarchy::build(&g, None, None, &path, ck()).unwrap();
        let k: Vec<f64> = (0..16).map(|e| 1.0 + e as f64).collect();
        let mats = ElementMaterials { conductivity: k.clone(), capacity: vec![2.0; 16] };
        h.reassemble(mats.clone(), None).unwrap();
        let fresh = Hierarchy::build(&g.clone().with_materials(mats).unwrap(), None, None, &path, ck()).unwrap();
        for (a, b) in h.levels().iter().zip(fresh.levels()) {
            assert_eq!(a.system.matrix, b.system.matrix);
        }
        assert_eq!(h.transfers()[0].direction, SpaceX);
        assert_eq!(h.transfers()[1].direction, TimeT);
    }
}
