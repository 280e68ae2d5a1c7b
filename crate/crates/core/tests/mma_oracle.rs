use proptest::prelude::*;
use stmg_core::mma::{Mma, MmaConfig};
use stmg_core::oracle::grid_search_2d;

/// Closed-form subproblem solution against brute force over a 2001 x 2001 grid.
fn compare(x: [f64; 2], df: [f64; 2], g: f64, dg: [f64; 2]) -> Result<(), TestCaseError> {
    let mut mma = Mma::new(2, 0.0, 1.0, MmaConfig::default()).unwrap();
    let f0 = df[0] * x[0] + df[1] * x[1];
    let sub = mma.subproblem(&x, f0, &df, g, &dg).unwrap();
    let (best, _) = sub.solve(200).unwrap();
    let brute = grid_search_2d(
        |a, b| (sub.constraint(&[a, b]) <= 0.0).then(|| sub.objective(&[a, b])),
        [sub.alpha[0], sub.alpha[1]],
        [sub.beta[0], sub.beta[1]],
        2001,
    );
    match brute {
        Some((xb, fb)) => {
            prop_assert!((best[0] - xb[0]).abs() < 1e-3 && (best[1] - xb[1]).abs() < 1e-3, "{best:?} vs {xb:?}");
            prop_assert!(sub.objective(&best) <= fb + 1e-9);
            prop_assert!(sub.constraint(&best) <= 1e-12);
        }
        None => prop_assert!(sub.constraint(&best) > 0.0),
    }
    Ok(())
}

#[test]
fn toy_problem_matches_grid_search() {
    compare([0.5, 0.5], [-1.0, -2.0], 0.0, [0.5, 0.5]).unwrap();
    compare([0.3, 0.6], [1.0, -0.5], -0.1, [0.5, 0.5]).unwrap();
    compare([0.9, 0.1], [0.2, 0.2], 0.05, [1.0, 0.3]).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn random_linear_subproblems(
        x0 in 0.0f64..=1.0, x1 in 0.0f64..=1.0,
        d0 in -3.0f64..3.0, d1 in -3.0f64..3.0,
        g in -0.3f64..0.1,
        a0 in 0.1f64..1.0, a1 in 0.1f64..1.0,
    ) {
        compare([x0, x1], [d0, d1], g, [a0, a1])?;
    }
}
