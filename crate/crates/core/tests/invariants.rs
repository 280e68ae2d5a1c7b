use proptest::prelude::*;
use stmg_core::materials::{design_ramp, simp_derivatives, simp_eval, DesignField, MaterialPair};
use stmg_core::mesh::{CoarseningDirection, ElementMaterials, SpaceTimeGrid};
use stmg_core::multigrid::{jacobi_smooth, Hierarchy, SolverConfig};
use stmg_core::optimisation::{optimise, OptimisationConfig};
use stmg_core::problems::Problem;
use stmg_core::rediscretisation::RediscretisationMethod;
use stmg_core::sparse::{norm2, SparseMatrix};
use stmg_core::strategy::{effective_lambda, plan_coarsening, CoarseningMode, CoarseningPath, PlanInput};
use stmg_core::transfer::{build_prolongation, build_restriction, restriction_scale, InterpolationMethod, TransferPair};

use CoarseningDirection::*;

fn direction() -> impl Strategy<Value = CoarseningDirection> {
    prop_oneof![Just(SpaceX), Just(TimeT), Just(FullST)]
}

fn interpolation() -> impl Strategy<Value = InterpolationMethod> {
    prop_oneof![Just(InterpolationMethod::Causal), Just(InterpolationMethod::Bilinear)]
}

fn ramp_hierarchy(n: usize, path: &str, method: &str) -> (Hierarchy, Vec<f64>) {
    let mat = MaterialPair::aluminium_epoxy();
    let g = SpaceTimeGrid::geometry(0.1, 10.0, n, n).unwrap();
    let d = design_ramp(&g, 50.0, 0.05).unwrap();
    let fine = g.with_materials(mat.materials_for(&d)).unwrap();
    let h = Hierarchy::build(
        &fine,
        Some(&d),
        Some(&mat),
        &path.parse().unwrap(),
        method.parse().unwrap(),
    )
    .unwrap();
    let b = h.fine().system.rhs.clone();
    (h, b)
}

/// Plain dense Jacobi with separate old and new iterates.
fn reference_jacobi(a: &[Vec<f64>], u: &[f64], b: &[f64], omega: f64, steps: usize) -> Vec<f64> {
    let mut old = u.to_vec();
    for _ in 0..steps {
        let mut new = old.clone();
        for i in 0..a.len() {
            let au: f64 = a[i].iter().zip(&old).map(|(x, y)| x * y).sum();
            new[i] = old[i] + omega * (b[i] - au) / a[i][i];
        }
        old = new;
    }
    old
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restriction_is_scaled_transpose(
        ne in 1usize..6, nt in 1usize..6,
        dir in direction(), interp in interpolation(),
    ) {
        prop_assume!(!(dir == FullST && interp == InterpolationMethod::Bilinear));
        let fine = SpaceTimeGrid::geometry(1.0, 1.0, 2 * ne, 2 * nt).unwrap();
        let coarse = fine.coarsen(dir).unwrap();
        let pair = TransferPair::build(&fine, &coarse, dir, interp).unwrap();
        let expected = pair.prolongation.transpose().scaled(restriction_scale(dir));
        prop_assert_eq!(&pair.restriction, &expected);
        prop_assert_eq!(build_restriction(&pair.prolongation, dir), expected);
    }

    #[test]
    fn causal_prolongation_never_reaches_back_in_time(
        ne in 1usize..6, nt in 1usize..6, dir in prop_oneof![Just(TimeT), Just(FullST)],
    ) {
        let fine = SpaceTimeGrid::geometry(1.0, 1.0, 2 * ne, 2 * nt).unwrap();
        let coarse = fine.coarsen(dir).unwrap();
        let p = build_prolongation(&fine, &coarse, dir, InterpolationMethod::Causal).unwrap();
        for (row, col, _) in p.triplets() {
            let fine_time = row / (fine.n_el() + 1);
            let coarse_time = col / (coarse.n_el() + 1);
            prop_assert!(fine_time == 2 * coarse_time || fine_time == 2 * coarse_time + 1);
        }
    }

    #[test]
    fn jacobi_uses_previous_iterate_only(
        diag in proptest::collection::vec(2.0f64..5.0, 6),
        off in proptest::collection::vec(-0.9f64..0.9, 36),
        b in proptest::collection::vec(-1.0f64..1.0, 6),
        u0 in proptest::collection::vec(-1.0f64..1.0, 6),
        omega in 0.1f64..1.0, steps in 0usize..6,
    ) {
        let mut dense = vec![vec![0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                dense[i][j] = if i == j { diag[i] } else if (i + j) % 3 == 0 { off[6 * i + j] } else { 0.0 };
            }
        }
        let m = SparseMatrix::from_triplets(
            6,
            6,
            (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).filter(|&(i, j)| dense[i][j] != 0.0).map(|(i, j)| (i, j, dense[i][j])),
        )
        .unwrap();
        let got = jacobi_smooth(&m, &u0, &b, omega, steps).unwrap();
        let want = reference_jacobi(&dense, &u0, &b, omega, steps);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn simp_derivatives_match_finite_differences(chi in 0.01f64..0.99) {
        let mat = MaterialPair::aluminium_epoxy();
        let h = 1e-6;
        let (kp, cp) = simp_eval(chi + h, &mat).unwrap();
        let (km, cm) = simp_eval(chi - h, &mat).unwrap();
        let (dk, dc) = simp_derivatives(chi, &mat).unwrap();
        prop_assert!(((kp - km) / (2.0 * h) - dk).abs() / dk.abs().max(1.0) < 1e-8);
        prop_assert!(((cp - cm) / (2.0 * h) - dc).abs() / dc.abs().max(1.0) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn v_cycle_is_linear(alpha in -4.0f64..4.0, beta in -4.0f64..4.0, method in 0usize..8) {
        let m = RediscretisationMethod::all()[method];
        let (h, b) = ramp_hierarchy(32, "x,t,x", &m.name());
        let cfg = SolverConfig::default();
        let n = b.len();
        let u1: Vec<f64> = (0..n).map(|k| ((k * 7919) % 101) as f64 * 1e3).collect();
        let b2: Vec<f64> = b.iter().rev().copied().collect();
        let u2 = vec![0.0; n];
        let b_mix: Vec<f64> = b.iter().zip(&b2).map(|(x, y)| alpha * x + beta * y).collect();
        let u_mix: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| alpha * x + beta * y).collect();
        let lhs = h.v_cycle(&b_mix, &u_mix, &cfg).unwrap();
        let v1 = h.v_cycle(&b, &u1, &cfg).unwrap();
        let v2 = h.v_cycle(&b2, &u2, &cfg).unwrap();
        let rhs: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| alpha * x + beta * y).collect();
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
        let scale = norm2(&v1).max(norm2(&v2)) * (alpha.abs() + beta.abs()).max(1e-3);
        prop_assert!(norm2(&diff) <= 1e-12 * scale);
    }
}

#[test]
fn time_coarsening_doubles_effective_anisotropy() {
    for id in 1..=9 {
        let inst = Problem::preset(id).unwrap().instantiate(128, 128).unwrap();
        let path = plan_coarsening(
            PlanInput { fine: &inst.grid, design: inst.design.as_ref(), mat: inst.material_pair.as_ref() },
            6,
            0.25,
            CoarseningMode::Contrast,
            "CK".parse::<RediscretisationMethod>().unwrap().reassembly,
        )
        .unwrap();
        let h = Hierarchy::build(&inst.grid, inst.design.as_ref(), inst.material_pair.as_ref(), &path, "CK".parse().unwrap())
            .unwrap();
        for (l, dir) in path.directions.iter().enumerate() {
            let before = effective_lambda(&h.levels()[l].grid).unwrap().lambda_eff;
            let after = effective_lambda(&h.levels()[l + 1].grid).unwrap().lambda_eff;
            if *dir == TimeT {
                assert!(after > before, "problem {id} level {l}");
                assert!((after / before - 2.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn design_independent_path_ignores_the_design() {
    let mat = MaterialPair::aluminium_epoxy();
    let g = SpaceTimeGrid::geometry(0.1, 10.0, 64, 64).unwrap();
    let plan = |d: &DesignField| -> CoarseningPath {
        let fine = g.clone().with_materials(mat.materials_for(d)).unwrap();
        plan_coarsening(
            PlanInput { fine: &fine, design: Some(d), mat: Some(&mat) },
            5,
            0.25,
            CoarseningMode::DesignIndependent(mat),
            "CR".parse::<RediscretisationMethod>().unwrap().reassembly,
        )
        .unwrap()
    };
    let reference = plan(&DesignField::uniform(64, 0.5).unwrap()).directions;
    for d in [
        DesignField::uniform(64, 0.0).unwrap(),
        DesignField::uniform(64, 1.0).unwrap(),
        design_ramp(&g, 50.0, 0.05).unwrap(),
        DesignField::new((0..64).map(|e| (e % 2) as f64).collect()).unwrap(),
    ] {
        assert_eq!(plan(&d).directions, reference);
    }
}

#[test]
fn reassembly_keeps_transfers_fixed() {
    let (mut h, _) = ramp_hierarchy(32, "x,t,x", "CR");
    let before = h.transfers().to_vec();
    let mat = MaterialPair::aluminium_epoxy();
    let d = DesignField::uniform(32, 0.2).unwrap();
    h.reassemble(mat.materials_for(&d), Some(&d)).unwrap();
    assert_eq!(h.transfers(), &before[..]);
    assert_eq!(h.path().to_string(), "x,t,x");
}

#[test]
fn optimisation_path_matches_fresh_plan() {
    let cfg = OptimisationConfig { n_el: 32, n_t: 32, n_levels: 3, max_cycles: 4, ..OptimisationConfig::default() };
    let result = optimise(&cfg).unwrap();
    let fine = SpaceTimeGrid::geometry(cfg.length, cfg.final_time, 32, 32)
        .unwrap()
        .with_materials(cfg.mat.materials_for(&result.design))
        .unwrap();
    let fresh = plan_coarsening(
        PlanInput { fine: &fine, design: Some(&result.design), mat: Some(&cfg.mat) },
        3,
        cfg.lambda_crit,
        CoarseningMode::DesignIndependent(cfg.mat),
        cfg.method.reassembly,
    )
    .unwrap();
    assert_eq!(fresh.directions, result.path.directions);
}

#[test]
fn projection_operator_is_galerkin_product() {
    let (h, _) = ramp_hierarchy(16, "t,x", "CP");
    for l in 0..h.n_levels() - 1 {
        let pair = &h.transfers()[l];
        let j = &h.levels()[l].system.matrix;
        let rjp = SparseMatrix::triple_product(&pair.restriction, j, &pair.prolongation).unwrap();
        let coarse = &h.levels()[l + 1].system.matrix;
        let scale = coarse.triplets().fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
        assert!(coarse.max_abs_diff(&rjp) <= 1e-12 * scale);
    }
}

#[test]
fn uniform_materials_give_uniform_anisotropy() {
    let g = SpaceTimeGrid::geometry(1.0, 1.0, 8, 8)
        .unwrap()
        .with_materials(ElementMaterials::uniform(8, 2.0, 1.0))
        .unwrap();
    let rep = effective_lambda(&g).unwrap();
    assert_eq!(rep.lambda_min, rep.lambda_max);
    assert!((rep.lambda_eff - 2.0 * (1.0 / 8.0) * 64.0).abs() < 1e-12);
}

#[test]
fn solver_is_linear_for_fixed_cycle_count() {
    let (h, b) = ramp_hierarchy(32, "x,t,x", "CR");
    let cfg = SolverConfig { tolerance: 1e-300, max_cycles: 4, ..SolverConfig::default() };
    let base = h.solve(&b, None, &cfg).unwrap();
    assert_eq!(base.cycles, 4);
    for alpha in [3.0, -0.25, 1e4] {
        let scaled: Vec<f64> = b.iter().map(|v| alpha * v).collect();
        let rep = h.solve(&scaled, None, &cfg).unwrap();
        let diff: Vec<f64> = rep.solution.iter().zip(&base.solution).map(|(x, y)| x - alpha * y).collect();
        assert!(norm2(&diff) <= 1e-12 * alpha.abs() * norm2(&base.solution));
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let (h, b) = ramp_hierarchy(32, "x,t,x", "BD");
    let a = h.solve(&b, None, &SolverConfig::default()).unwrap();
    let c = h.solve(&b, None, &SolverConfig::default()).unwrap();
    assert_eq!(a.residual_history, c.residual_history);
    assert_eq!(a.solution, c.solution);
    assert_eq!(a.history_csv().lines().count(), a.cycles + 2);
}

#[test]
fn contrast_mode_on_uniform_material_matches_uniform_mode() {
    for tt in [-12, -8, -4, 0] {
        let inst = Problem::preset(0).unwrap().with_final_time(2f64.powi(tt)).instantiate(64, 64).unwrap();
        let plan = |mode| {
            plan_coarsening(
                PlanInput { fine: &inst.grid, design: None, mat: None },
                5,
                0.25,
                mode,
                "CK".parse::<RediscretisationMethod>().unwrap().reassembly,
            )
            .unwrap()
            .directions
        };
        assert_eq!(plan(CoarseningMode::Contrast), plan(CoarseningMode::Uniform));
    }
}
