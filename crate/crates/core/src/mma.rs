//! Method of Moving Asymptotes for one inequality constraint and box bounds.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmaConfig {
    pub move_limit: f64,
    pub asymptote_init: f64,
    pub asymptote_decrease: f64,
    pub asymptote_increase: f64,
    /// Regularisation added to the curvature terms, relative to the box width.
    pub raa0: f64,
    pub albefa: f64,
    pub max_bisections: usize,
}

impl Default for MmaConfig {
    fn default() -> Self {
        Self {
            move_limit: 0.2,
            asymptote_init: 0.5,
            asymptote_decrease: 0.7,
            asymptote_increase: 1.2,
            raa0: 1e-5,
            albefa: 0.1,
            max_bisections: 200,
        }
    }
}

/// Separable convex approximation
/// `f(x) = r + sum_j p_j / (U_j - x_j) + q_j / (x_j - L_j)` of the objective and the
/// constraint, restricted to `alpha <= x <= beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmaSubproblem {
    pub low: Vec<f64>,
    pub upp: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub p0: Vec<f64>,
    pub q0: Vec<f64>,
    pub r0: f64,
    pub p1: Vec<f64>,
    pub q1: Vec<f64>,
    pub r1: f64,
}

fn approx(p: &[f64], q: &[f64], r: f64, low: &[f64], upp: &[f64], x: &[f64]) -> f64 {
    let mut s = r;
    for j in 0..x.len() {
        s += p[j] / (upp[j] - x[j]) + q[j] / (x[j] - low[j]);
    }
    s
}

fn curvature(df: f64, lower_gap: f64, upper_gap: f64, reg: f64) -> (f64, f64) {
    let (pos, neg) = (df.max(0.0), (-df).max(0.0));
    (
        upper_gap * upper_gap * (1.001 * pos + 0.001 * neg + reg),
        lower_gap * lower_gap * (0.001 * pos + 1.001 * neg + reg),
    )
}

impl MmaSubproblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: &[f64],
        low: Vec<f64>,
        upp: Vec<f64>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        f0: f64,
        df0: &[f64],
        g: f64,
        dg: &[f64],
        reg: f64,
    ) -> Self {
        let n = x.len();
        let (mut p0, mut q0, mut p1, mut q1) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let (lg, ug) = (x[j] - low[j], upp[j] - x[j]);
            (p0[j], q0[j]) = curvature(df0[j], lg, ug, reg);
            (p1[j], q1[j]) = curvature(dg[j], lg, ug, reg);
        }
        let r0 = f0 - approx(&p0, &q0, 0.0, &low, &upp, x);
        let r1 = g - approx(&p1, &q1, 0.0, &low, &upp, x);
        Self { low, upp, alpha, beta, p0, q0, r0, p1, q1, r1 }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        approx(&self.p0, &self.q0, self.r0, &self.low, &self.upp, x)
    }

    pub fn constraint(&self, x: &[f64]) -> f64 {
        approx(&self.p1, &self.q1, self.r1, &self.low, &self.upp, x)
    }

    /// Minimiser of the Lagrangian for multiplier `mu`.
    pub fn x_of_mu(&self, mu: f64) -> Vec<f64> {
        (0..self.low.len())
            .map(|j| {
                let sp = (self.p0[j] + mu * self.p1[j]).sqrt();
                let sq = (self.q0[j] + mu * self.q1[j]).sqrt();
                let x = (sp * self.low[j] + sq * self.upp[j]) / (sp + sq);
                x.clamp(self.alpha[j], self.beta[j])
            })
            .collect()
    }

    /// Solves the subproblem by bisection on the constraint multiplier, returning the
    /// upper end of the final bracket so the approximated constraint holds. When no
    /// point in the box satisfies it, the least infeasible point is returned with an
    /// infinite multiplier.
    pub fn solve(&self, max_bisections: usize) -> Result<(Vec<f64>, f64)> {
        let x0 = self.x_of_mu(0.0);
        if self.constraint(&x0) <= 0.0 {
            return Ok((x0, 0.0));
        }
        // The constraint alone, minimised over the box: the limit of x(mu) as mu grows.
        let least_infeasible: Vec<f64> = (0..self.low.len())
            .map(|j| {
                let (sp, sq) = (self.p1[j].sqrt(), self.q1[j].sqrt());
                ((sp * self.low[j] + sq * self.upp[j]) / (sp + sq)).clamp(self.alpha[j], self.beta[j])
            })
            .collect();
        if self.constraint(&least_infeasible) > 0.0 {
            return Ok((least_infeasible, f64::INFINITY));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.constraint(&self.x_of_mu(hi)) > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 1000 {
                return Err(Error::SubproblemNotConverged(doublings));
            }
        }
        for _ in 0..max_bisections {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.constraint(&self.x_of_mu(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((self.x_of_mu(hi), hi))
    }
}

#[derive(Debug, Clone)]
pub struct Mma {
    cfg: MmaConfig,
    xmin: f64,
    xmax: f64,
    iteration: usize,
    low: Vec<f64>,
    upp: Vec<f64>,
    x_prev: Option<Vec<f64>>,
    x_prev2: Option<Vec<f64>>,
}

impl Mma {
    pub fn new(n: usize, xmin: f64, xmax: f64, cfg: MmaConfig) -> Result<Self> {
        if !(xmax > xmin) {
            return Err(invalid("bounds", "need xmin < xmax"));
        }
        if !(cfg.move_limit > 0.0) || !(cfg.asymptote_init > 0.0) {
            return Err(invalid("mma", "move limit and asymptote offset must be positive"));
        }
        Ok(Self {
            cfg,
            xmin,
            xmax,
            iteration: 0,
            low: vec![0.0; n],
            upp: vec![0.0; n],
            x_prev: None,
            x_prev2: None,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }

    /// Builds the subproblem around `x` and advances the asymptote history.
    pub fn subproblem(&mut self, x: &[f64], f0: f64, df0: &[f64], g: f64, dg: &[f64]) -> Result<MmaSubproblem> {
        let n = self.low.len();
        if x.len() != n || df0.len() != n || dg.len() != n {
            return Err(Error::DimensionMismatch(format!("MMA set up for {n} variables")));
        }
        let width = self.xmax - self.xmin;
        let c = &self.cfg;
        match (&self.x_prev, &self.x_prev2) {
            (Some(x1), Some(x2)) => {
                for j in 0..n {
                    let trend = (x[j] - x1[j]) * (x1[j] - x2[j]);
                    let factor = if trend < 0.0 {
                        c.asymptote_decrease
                    } else if trend > 0.0 {
                        c.asymptote_increase
                    } else {
                        1.0
                    };
                    let low = x[j] - factor * (x1[j] - self.low[j]);
                    let upp = x[j] + factor * (self.upp[j] - x1[j]);
                    self.low[j] = low.clamp(x[j] - 10.0 * width, x[j] - 0.01 * width);
                    self.upp[j] = upp.clamp(x[j] + 0.01 * width, x[j] + 10.0 * width);
                }
            }
            _ => {
                for j in 0..n {
                    self.low[j] = x[j] - c.asymptote_init * width;
                    self.upp[j] = x[j] + c.asymptote_init * width;
                }
            }
        }
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for j in 0..n {
            alpha[j] = self
                .xmin
                .max(self.low[j] + c.albefa * (x[j] - self.low[j]))
                .max(x[j] - c.move_limit * width);
            beta[j] = self
                .xmax
                .min(self.upp[j] - c.albefa * (self.upp[j] - x[j]))
                .min(x[j] + c.move_limit * width);
        }
        self.x_prev2 = self.x_prev.take();
        self.x_prev = Some(x.to_vec());
        self.iteration += 1;
        Ok(MmaSubproblem::new(
            x,
            self.low.clone(),
            self.upp.clone(),
            alpha,
            beta,
            f0,
            df0,
            g,
            dg,
            c.raa0 / width,
        ))
    }

    /// One design update: minimise `f0` subject to `g <= 0`.
    pub fn update(&mut self, x: &[f64], f0: f64, df0: &[f64], g: f64, dg: &[f64]) -> Result<Vec<f64>> {
        let sub = self.subproblem(x, f0, df0, g, dg)?;
        Ok(sub.solve(self.cfg.max_bisections)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_with_slack_keeps_design() {
        let x = vec![0.3, 0.5, 0.8];
        let mut m = Mma::new(3, 0.0, 1.0, MmaConfig::default()).unwrap();
        let new = m.update(&x, 1.0, &[0.0; 3], -0.5, &[0.1; 3]).unwrap();
        for (a, b) in new.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn descends_linear_objective() {
        let mut m = Mma::new(2, 0.0, 1.0, MmaConfig::default()).unwrap();
        let mut x = vec![0.5, 0.5];
        for _ in 0..30 {
            let g = x[0] + x[1] - 1.0;
            x = m.update(&x, -x[0] - 2.0 * x[1], &[-1.0, -2.0], g, &[1.0, 1.0]).unwrap();
            assert!(x[0] + x[1] - 1.0 <= 1e-12);
        }
        assert!(x[1] > 0.99 && x[0] < 0.01, "{x:?}");
    }

    #[test]
    fn asymptotes_adapt_to_oscillation() {
        let mut m = Mma::new(1, 0.0, 1.0, MmaConfig::default()).unwrap();
        m.subproblem(&[0.5], 0.0, &[1.0], -1.0, &[1.0]).unwrap();
        m.subproblem(&[0.6], 0.0, &[1.0], -1.0, &[1.0]).unwrap();
        let (l, _) = m.asymptotes();
        let gap_before = 0.6 - l[0];
        m.subproblem(&[0.5], 0.0, &[1.0], -1.0, &[1.0]).unwrap();
        let (l, _) = m.asymptotes();
        assert!((0.5 - l[0] - 0.7 * gap_before).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn update_respects_box_and_move_limit(
            x in proptest::collection::vec(0.0f64..=1.0, 1..12),
            df in proptest::collection::vec(-5.0f64..5.0, 12),
            g in -0.5f64..0.5,
        ) {
            let n = x.len();
            let mut m = Mma::new(n, 0.0, 1.0, MmaConfig::default()).unwrap();
            let dg = vec![1.0 / n as f64; n];
            let new = m.update(&x, 0.0, &df[..n], g, &dg).unwrap();
            for (a, b) in new.iter().zip(&x) {
                prop_assert!(*a >= (b - 0.2).max(0.0) - 1e-15 && *a <= (b + 0.2).min(1.0) + 1e-15);
            }
        }
    }
}
