//! Experiment runners. Each sweep point is independent; rayon runs them in
//! parallel and `collect` keeps sweep order.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use rayon::prelude::*;
use stmg_core::mesh::CoarseningDirection;
use stmg_core::multigrid::{Hierarchy, SolveStatus, SolverConfig};
use stmg_core::optimisation::{history_csv, optimise, OptimisationConfig, OptimisationResult, RestartMode};
use stmg_core::problems::{Problem, ProblemInstance};
use stmg_core::rediscretisation::RediscretisationMethod;
use stmg_core::strategy::{effective_lambda, plan_coarsening, CoarseningMode, CoarseningPath, LambdaEffCandidate, PlanInput};

use crate::config::{Experiment, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub problem: u8,
    /// Rediscretisation method, or the coarsening direction for two-grid sweeps.
    pub method: String,
    pub sweep: Vec<(&'static str, f64)>,
    pub path: String,
    pub factor: Option<f64>,
    pub cycles: usize,
    pub cause: SolveStatus,
}

impl ResultRow {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.sweep.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

fn solve_point(
    inst: &ProblemInstance,
    path: &CoarseningPath,
    method: RediscretisationMethod,
    solver: &SolverConfig,
) -> stmg_core::Result<(Option<f64>, usize, SolveStatus)> {
    let h = Hierarchy::build(&inst.grid, inst.design.as_ref(), inst.material_pair.as_ref(), path, method)?;
    let rep = h.solve_own_rhs(None, solver)?;
    Ok((rep.convergence_factor, rep.cycles, rep.status))
}

fn two_grid_row(
    cfg: &ExperimentConfig,
    inst: &ProblemInstance,
    dir: CoarseningDirection,
    sweep: Vec<(&'static str, f64)>,
) -> stmg_core::Result<ResultRow> {
    let path = CoarseningPath::fixed(vec![dir]);
    let (factor, cycles, cause) = solve_point(inst, &path, cfg.methods[0], &cfg.solver)?;
    Ok(ResultRow {
        experiment: cfg.experiment,
        problem: inst.problem.id,
        method: dir.to_string(),
        sweep,
        path: path.to_string(),
        factor,
        cycles,
        cause,
    })
}

/// Uniform material, two grids, x, t and full coarsening over `lambda = 2^k`.
pub fn anisotropy_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ResultRow>> {
    use CoarseningDirection::*;
    let n = cfg.resolution;
    let (lo, hi) = cfg.lambda_exponents;
    let tasks: Vec<(i32, CoarseningDirection)> =
        (lo..=hi).flat_map(|k| [SpaceX, TimeT, FullST].map(|d| (k, d))).collect();
    tasks
        .par_iter()
        .map(|&(k, dir)| {
            let lambda = 2f64.powi(k);
            // lambda = dt / dx^2 with dx = 1 / n and dt = t_T / n
            let final_time = lambda / n as f64;
            let inst = Problem::preset(0)?.with_final_time(final_time).instantiate(n, n)?;
            two_grid_row(cfg, &inst, dir, vec![("lambda", lambda), ("final_time", final_time)])
        })
        .collect::<stmg_core::Result<Vec<_>>>()
        .context("anisotropy sweep")
}

/// Final times `2^(j / points_per_octave)` covering `[lo, hi]`, both ends included.
pub fn final_times(range: (f64, f64), points_per_octave: u32) -> Vec<f64> {
    let p = points_per_octave as f64;
    let first = (range.0.log2() * p - 1e-9).ceil() as i64;
    let last = (range.1.log2() * p + 1e-9).floor() as i64;
    (first..=last).map(|j| 2f64.powf(j as f64 / p)).collect()
}

/// Two-grid x and t coarsening across each problem's final-time range.
pub fn contrast_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ResultRow>> {
    use CoarseningDirection::*;
    let mut tasks = Vec::new();
    for &p in &cfg.problems {
        let problem = Problem::preset(p)?;
        let range = problem.final_time_range.context("problem has no final-time range")?;
        for t in final_times(range, cfg.points_per_octave) {
            for dir in [SpaceX, TimeT] {
                tasks.push((problem.with_final_time(t), dir));
            }
        }
    }
    tasks
        .par_iter()
        .map(|(problem, dir)| {
            let inst = problem.instantiate(cfg.resolution, cfg.resolution)?;
            let report = effective_lambda(&inst.grid)?;
            let mut sweep = vec![("final_time", problem.final_time), ("lambda_eff", report.lambda_eff)];
            if cfg.diagnostics {
                for c in LambdaEffCandidate::ALL {
                    sweep.push((c.name(), c.evaluate(&report.element_lambda)));
                }
            }
            two_grid_row(cfg, &inst, *dir, sweep)
        })
        .collect::<stmg_core::Result<Vec<_>>>()
        .context("contrast sweep")
}

/// Every method at every level count, contrast-mode coarsening.
pub fn levels_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ResultRow>> {
    let mut tasks = Vec::new();
    for &p in &cfg.problems {
        for &m in &cfg.methods {
            for nl in cfg.levels.iter() {
                tasks.push((p, m, nl));
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(p, m, nl)| {
            let inst = Problem::preset(p)?.instantiate(cfg.resolution, cfg.resolution)?;
            let input = PlanInput { fine: &inst.grid, design: inst.design.as_ref(), mat: inst.material_pair.as_ref() };
            let path = plan_coarsening(input, nl, cfg.lambda_crit, CoarseningMode::Contrast, m.reassembly)?;
            let (factor, cycles, cause) = solve_point(&inst, &path, m, &cfg.solver)?;
            Ok(ResultRow {
                experiment: cfg.experiment,
                problem: p,
                method: m.name(),
                sweep: vec![("levels", nl as f64)],
                path: path.to_string(),
                factor,
                cycles,
                cause,
            })
        })
        .collect::<stmg_core::Result<Vec<_>>>()
        .context("levels sweep")
}

/// Gap problems with gap fraction `2^(-n/3)` under each resolution guard.
pub fn feature_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ResultRow>> {
    let mut tasks = Vec::new();
    for &p in &cfg.problems {
        for n in cfg.gap_exponents.0..=cfg.gap_exponents.1 {
            for &guard in &cfg.resolution_guards {
                for &m in &cfg.methods {
                    tasks.push((p, n, guard, m));
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(p, n, guard, m)| {
            let fraction = 2f64.powf(-(n as f64) / 3.0);
            let inst = Problem::preset(p)?.with_gap_fraction(fraction)?.instantiate(cfg.resolution, cfg.resolution)?;
            let input = PlanInput { fine: &inst.grid, design: inst.design.as_ref(), mat: inst.material_pair.as_ref() };
            let path =
                plan_coarsening(input, cfg.levels.first, cfg.lambda_crit, CoarseningMode::Resolution(guard), m.reassembly)?;
            let (factor, cycles, cause) = solve_point(&inst, &path, m, &cfg.solver)?;
            Ok(ResultRow {
                experiment: cfg.experiment,
                problem: p,
                method: m.name(),
                sweep: vec![("n", n as f64), ("gap_fraction", fraction), ("resolution_guard", guard as f64)],
                path: path.to_string(),
                factor,
                cycles,
                cause,
            })
        })
        .collect::<stmg_core::Result<Vec<_>>>()
        .context("feature sweep")
}

#[derive(Debug, Clone)]
pub struct OptimiseRun {
    pub config: OptimisationConfig,
    pub result: OptimisationResult,
}

pub fn optimisation_config(cfg: &ExperimentConfig, method: RediscretisationMethod, restart: RestartMode) -> OptimisationConfig {
    OptimisationConfig {
        n_el: cfg.resolution,
        n_t: cfg.resolution,
        method,
        restart,
        n_levels: cfg.levels.first,
        lambda_crit: cfg.lambda_crit,
        solver: cfg.solver,
        max_cycles: cfg.optimisation_cycles,
        snapshot_cycles: cfg.snapshot_cycles.clone(),
        ..OptimisationConfig::default()
    }
}

/// One optimisation per (method, restart) pair.
pub fn optimise_runs(cfg: &ExperimentConfig) -> anyhow::Result<Vec<OptimiseRun>> {
    let tasks: Vec<_> =
        cfg.methods.iter().flat_map(|&m| cfg.restarts.iter().map(move |&r| (m, r))).collect();
    tasks
        .par_iter()
        .map(|&(m, r)| {
            let config = optimisation_config(cfg, m, r);
            let result = optimise(&config).with_context(|| format!("optimisation {m} {r}"))?;
            Ok(OptimiseRun { config, result })
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Sweep rows as CSV: config comment, header, one line per row.
pub fn rows_csv(cfg: &ExperimentConfig, rows: &[ResultRow]) -> String {
    let mut s = format!("# {cfg}\n");
    let names: Vec<&str> = rows.first().map(|r| r.sweep.iter().map(|(n, _)| *n).collect()).unwrap_or_default();
    s.push_str("experiment,problem,method,");
    for n in &names {
        s.push_str(n);
        s.push(',');
    }
    s.push_str("path,factor,cycles,cause\n");
    for r in rows {
        let _ = write!(s, "{},{},{},", r.experiment, r.problem, r.method);
        for (_, v) in &r.sweep {
            let _ = write!(s, "{v},");
        }
        let _ = writeln!(s, "\"{}\",{},{},{}", r.path, fmt_opt(r.factor), r.cycles, r.cause);
    }
    s
}

fn run_stem(run: &OptimiseRun) -> String {
    format!("optimise_{}_{}", run.config.method, run.config.restart)
}

pub fn snapshots_csv(cfg: &ExperimentConfig, run: &OptimiseRun) -> String {
    let mut s = format!("# {cfg}\ncycle,element,chi\n");
    for (cycle, design) in &run.result.snapshots {
        for (e, chi) in design.values().iter().enumerate() {
            let _ = writeln!(s, "{cycle},{e},{chi}");
        }
    }
    let last = run.result.history.last().map_or(0, |r| r.cycle);
    for (e, chi) in run.result.design.values().iter().enumerate() {
        let _ = writeln!(s, "{last},{e},{chi}");
    }
    s
}

pub fn summary_csv(cfg: &ExperimentConfig, runs: &[OptimiseRun]) -> String {
    let mut s = format!(
        "# {cfg}\nmethod,restart_mode,cycles,converged,final_theta,final_volume,primal_cycles,adjoint_cycles,grey_fraction,path\n"
    );
    for run in runs {
        let r = &run.result;
        let last = r.history.last().expect("optimisation records at least one cycle");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},\"{}\"",
            run.config.method,
            run.config.restart,
            r.history.len(),
            r.converged,
            last.theta,
            last.volume,
            r.total_primal_cycles(),
            r.total_adjoint_cycles(),
            r.grey_fraction(),
            r.path
        );
    }
    s
}

/// Runs the experiment and writes its CSV files under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut files: Vec<(String, String)> = Vec::new();
    match cfg.experiment {
        Experiment::AnisotropySweep => files.push((cfg.experiment.to_string(), rows_csv(cfg, &anisotropy_sweep(cfg)?))),
        Experiment::ContrastSweep => files.push((cfg.experiment.to_string(), rows_csv(cfg, &contrast_sweep(cfg)?))),
        Experiment::LevelsSweep => files.push((cfg.experiment.to_string(), rows_csv(cfg, &levels_sweep(cfg)?))),
        Experiment::FeatureSweep => files.push((cfg.experiment.to_string(), rows_csv(cfg, &feature_sweep(cfg)?))),
        Experiment::Optimise => {
            let runs = optimise_runs(cfg)?;
            for run in &runs {
                let history = format!("# {cfg}\n{}", history_csv(&run.result, &run.config));
                files.push((format!("{}_history", run_stem(run)), history));
                files.push((format!("{}_snapshots", run_stem(run)), snapshots_csv(cfg, run)));
            }
            files.push(("optimise_summary".to_string(), summary_csv(cfg, &runs)));
        }
    }
    let mut written = Vec::new();
    for (stem, body) in files {
        let path = cfg.out.join(format!("{stem}.csv"));
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
