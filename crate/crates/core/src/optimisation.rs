//! Objective, adjoint sensitivities and the nested design optimisation loop.

use std::fmt;
use std::str::FromStr;

use crate::assembly::element_matrices;
use crate::error::{invalid, Error, Result};
use crate::materials::{DesignField, MaterialPair};
use crate::mesh::SpaceTimeGrid;
use crate::mma::{Mma, MmaConfig};
use crate::multigrid::{Hierarchy, SolveReport, SolveStatus, SolverConfig};
use crate::rediscretisation::RediscretisationMethod;
use crate::strategy::{plan_coarsening, CoarseningMode, CoarseningPath, PlanInput};

pub const THETA_REF: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestartMode {
    /// Start each solve from the previous optimisation cycle's solution.
    Warm,
    /// Start each solve from zero.
    Cold,
}

impl RestartMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Warm => "warm",
            Self::Cold => "cold",
        }
    }
}

impl fmt::Display for RestartMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RestartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "warm" => Ok(Self::Warm),
            "cold" => Ok(Self::Cold),
            _ => Err(Error::Parse { what: "restart mode", input: s.to_string() }),
        }
    }
}

/// `b^T u dt / theta_ref`.
pub fn objective(b: &[f64], u: &[f64], dt: f64, theta_ref: f64) -> f64 {
    crate::sparse::dot(b, u) * dt / theta_ref
}

/// `g = sum(chi) dx / (fraction L) - 1` and its gradient.
pub fn volume_constraint(design: &[f64], dx: f64, length: f64, fraction: f64) -> (f64, Vec<f64>) {
    let cap = fraction * length;
    let g = design.iter().sum::<f64>() * dx / cap - 1.0;
    (g, vec![dx / cap; design.len()])
}

/// Adjoint solve `J^T lambda = b dt / theta_ref` on a transposed hierarchy.
pub fn adjoint_solve(
    adjoint: &Hierarchy,
    b: &[f64],
    dt: f64,
    theta_ref: f64,
    initial: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let rhs: Vec<f64> = b.iter().map(|v| v * dt / theta_ref).collect();
    adjoint.solve(&rhs, initial, cfg)
}

/// `d theta / d chi_e = -lambda^T (dJ/dchi_e) u`, assembled element by element.
/// Fixed degrees of freedom contribute nothing.
pub fn sensitivities(
    grid: &SpaceTimeGrid,
    u: &[f64],
    lambda: &[f64],
    design: &DesignField,
    mat: &MaterialPair,
) -> Result<Vec<f64>> {
    let n = grid.n_dofs();
    if u.len() != n || lambda.len() != n || design.len() != grid.n_el() {
        return Err(Error::DimensionMismatch("sensitivity inputs do not match the grid".into()));
    }
    let (k_unit, c_unit) = element_matrices(1.0, 1.0, grid.dx())?;
    let inv_dt = 1.0 / grid.dt();
    let nodes = grid.n_nodes();
    let mut out = Vec::with_capacity(grid.n_el());
    for (e, &chi) in design.values().iter().enumerate() {
        let (dk, dc) = mat.derivatives(chi)?;
        let mut cur = [[0.0; 2]; 2];
        let mut prev = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                prev[a][b] = dc * c_unit[a][b] * inv_dt;
                cur[a][b] = prev[a][b] + dk * k_unit[a][b];
            }
        }
        // node 0 is fixed, so element 0 only couples its right node
        let first = usize::from(e == 0);
        let mut s = 0.0;
        for t in 1..=grid.n_t() {
            let row = t * nodes + e;
            let prow = (t - 1) * nodes + e;
            for a in first..2 {
                let l = lambda[row + a];
                let mut acc = 0.0;
                for b in first..2 {
                    acc += cur[a][b] * u[row + b];
                    if t >= 2 {
                        acc -= prev[a][b] * u[prow + b];
                    }
                }
                s += l * acc;
            }
        }
        out.push(-s);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimisationConfig {
    pub mat: MaterialPair,
    pub length: f64,
    pub final_time: f64,
    pub n_el: usize,
    pub n_t: usize,
    pub theta_ref: f64,
    pub volume_fraction: f64,
    pub method: RediscretisationMethod,
    pub restart: RestartMode,
    pub n_levels: usize,
    pub lambda_crit: f64,
    pub solver: SolverConfig,
    pub relative_change: f64,
    pub window: usize,
    pub max_cycles: usize,
    pub mma: MmaConfig,
    /// Optimisation cycles whose design is kept in the result.
    pub snapshot_cycles: Vec<usize>,
}

impl Default for OptimisationConfig {
    fn default() -> Self {
        Self {
            mat: MaterialPair::aluminium_epoxy(),
            length: 0.1,
            final_time: 10.0,
            n_el: 256,
            n_t: 256,
            theta_ref: THETA_REF,
            volume_fraction: 0.5,
            method: "CR".parse().expect("known method"),
            restart: RestartMode::Warm,
            n_levels: 6,
            lambda_crit: 0.25,
            solver: SolverConfig::default().with_smoothing(20),
            relative_change: 1e-3,
            window: 5,
            max_cycles: 500,
            mma: MmaConfig::default(),
            snapshot_cycles: vec![0, 10, 50],
        }
    }
}

impl OptimisationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        if !(self.theta_ref > 0.0) {
            return Err(invalid("theta_ref", "must be positive"));
        }
        if !(self.volume_fraction > 0.0 && self.volume_fraction <= 1.0) {
            return Err(invalid("volume_fraction", "must lie in (0, 1]"));
        }
        if self.max_cycles == 0 {
            return Err(invalid("max_cycles", "must be at least 1"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub theta: f64,
    /// Material fraction `sum(chi) dx / L`.
    pub volume: f64,
    pub primal_cycles: usize,
    pub adjoint_cycles: usize,
    pub primal_status: SolveStatus,
    pub adjoint_status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct OptimisationResult {
    pub design: DesignField,
    pub history: Vec<CycleRecord>,
    pub path: CoarseningPath,
    pub snapshots: Vec<(usize, DesignField)>,
    /// Stopped by the relative-change rule rather than the cycle cap.
    pub converged: bool,
}

impl OptimisationResult {
    pub fn total_primal_cycles(&self) -> usize {
        self.history.iter().map(|r| r.primal_cycles).sum()
    }

    pub fn total_adjoint_cycles(&self) -> usize {
        self.history.iter().map(|r| r.adjoint_cycles).sum()
    }

    /// Fraction of elements with `0.01 < chi < 0.99`.
    pub fn grey_fraction(&self) -> f64 {
        let v = self.design.values();
        v.iter().filter(|&&c| c > 0.01 && c < 0.99).count() as f64 / v.len() as f64
    }
}

fn check_solve(report: &SolveReport, cycle: usize, which: &'static str) -> Result<()> {
    if report.status == SolveStatus::Diverged {
        return Err(Error::SolverDiverged {
            cycle,
            which,
            residual: report.final_residual(),
        });
    }
    Ok(())
}

/// Runs the optimisation from the uniform design `chi = volume_fraction`.
pub fn optimise(cfg: &OptimisationConfig) -> Result<OptimisationResult> {
    optimise_with(cfg, |_| {})
}

/// As [`optimise`], calling `observe` after every recorded cycle.
pub fn optimise_with(
    cfg: &OptimisationConfig,
    mut observe: impl FnMut(&CycleRecord),
) -> Result<OptimisationResult> {
    cfg.validate()?;
    let mat = cfg.mat;
    let geometry = SpaceTimeGrid::geometry(cfg.length, cfg.final_time, cfg.n_el, cfg.n_t)?;
    let mut design = DesignField::uniform(cfg.n_el, cfg.volume_fraction)?;
    let fine = geometry.clone().with_materials(mat.materials_for(&design))?;
    let path = plan_coarsening(
        PlanInput { fine: &fine, design: Some(&design), mat: Some(&mat) },
        cfg.n_levels,
        cfg.lambda_crit,
        CoarseningMode::DesignIndependent(mat),
        cfg.method.reassembly,
    )?;
    let mut hierarchy = Hierarchy::build(&fine, Some(&design), Some(&mat), &path, cfg.method)?;
    let mut mma = Mma::new(cfg.n_el, 0.0, 1.0, cfg.mma)?;
    let (dx, dt) = (geometry.dx(), geometry.dt());

    let mut history: Vec<CycleRecord> = Vec::new();
    let mut snapshots = Vec::new();
    let mut u_prev: Option<Vec<f64>> = None;
    let mut l_prev: Option<Vec<f64>> = None;
    let mut calm = 0usize;
    let mut converged = false;

    for cycle in 0..cfg.max_cycles {
        if cycle > 0 {
            hierarchy.reassemble(mat.materials_for(&design), Some(&design))?;
        }
        if cfg.snapshot_cycles.contains(&cycle) {
            snapshots.push((cycle, design.clone()));
        }
        let warm = cfg.restart == RestartMode::Warm;
        let b = hierarchy.fine().system.rhs.clone();
        let primal = hierarchy.solve(&b, u_prev.as_deref().filter(|_| warm), &cfg.solver)?;
        check_solve(&primal, cycle, "primal")?;
        let theta = objective(&b, &primal.solution, dt, cfg.theta_ref);

        let adjoint_h = hierarchy.adjoint()?;
        let adjoint = adjoint_solve(&adjoint_h, &b, dt, cfg.theta_ref, l_prev.as_deref().filter(|_| warm), &cfg.solver)?;
        check_solve(&adjoint, cycle, "adjoint")?;

        let grad = sensitivities(&hierarchy.fine().grid, &primal.solution, &adjoint.solution, &design, &mat)?;
        let (g, dg) = volume_constraint(design.values(), dx, cfg.length, cfg.volume_fraction);
        let record = CycleRecord {
            cycle,
            theta,
            volume: design.values().iter().sum::<f64>() * dx / cfg.length,
            primal_cycles: primal.cycles,
            adjoint_cycles: adjoint.cycles,
            primal_status: primal.status,
            adjoint_status: adjoint.status,
        };
        observe(&record);
        if let Some(last) = history.last() {
            if ((theta - last.theta) / theta).abs() < cfg.relative_change {
                calm += 1;
            } else {
                calm = 0;
            }
        }
        history.push(record);
        u_prev = Some(primal.solution);
        l_prev = Some(adjoint.solution);
        if calm >= cfg.window {
            converged = true;
            break;
        }

        let x = mma.update(design.values(), theta, &grad, g, &dg)?;
        design = DesignField::new(x.into_iter().map(crate::materials::clamp01).collect())?;
    }
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    Ok(OptimisationResult {
        design,
        history,
        path,
        snapshots,
        converged,
    })
}

/// Optimisation history as CSV, one row per cycle.
pub fn history_csv(result: &OptimisationResult, cfg: &OptimisationConfig) -> String {
    let mut s = String::from("cycle,theta,volume,primal_cycles,adjoint_cycles,restart_mode,method\n");
    for r in &result.history {
        s.push_str(&format!(
            "{},{:e},{:e},{},{},{},{}\n",
            r.cycle, r.theta, r.volume, r.primal_cycles, r.adjoint_cycles, cfg.restart, cfg.method
        ));
    }
    s
}
