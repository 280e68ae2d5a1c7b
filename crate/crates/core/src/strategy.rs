//! Anisotropy indicators and planning of the coarsening path.
//!
//! At every level the indicator (`lambda`, `lambda_eff`, or the design-independent
//! variant) is compared against `lambda_crit`: below it the next level is coarsened
//! in time, otherwise in space.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::materials::{DesignField, MaterialPair};
use crate::mesh::{CoarseningDirection, SpaceTimeGrid};
use crate::rediscretisation::{coarsen_materials, ReassemblyMethod};

pub const DEFAULT_LAMBDA_CRIT: f64 = 0.25;

/// `D dt / dx^2`.
pub fn anisotropy(diffusivity: f64, dt: f64, dx: f64) -> f64 {
    diffusivity * dt / (dx * dx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyReport {
    pub element_lambda: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Geometric mean of `lambda_min` and `lambda_max`.
    pub lambda_eff: f64,
    /// Geometric mean of the smallest and largest element diffusivity.
    pub d_eff: f64,
}

pub fn effective_lambda(grid: &SpaceTimeGrid) -> Result<AnisotropyReport> {
    let mat = grid.materials()?;
    let (dt, dx) = (grid.dt(), grid.dx());
    let element_lambda: Vec<f64> = mat.diffusivity().map(|d| anisotropy(d, dt, dx)).collect();
    let (d_min, d_max) = min_max(mat.diffusivity());
    let (lambda_min, lambda_max) = min_max(element_lambda.iter().copied());
    Ok(AnisotropyReport {
        lambda_eff: (lambda_min * lambda_max).sqrt(),
        d_eff: (d_min * d_max).sqrt(),
        element_lambda,
        lambda_min,
        lambda_max,
    })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Candidate definitions of the effective anisotropy that were tried and rejected in
/// favour of the geometric mean of the extremes. Kept for the contrast-sweep
/// diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaEffCandidate {
    GeometricMeanOfExtremes,
    GeometricMean,
    ArithmeticMeanOfExtremes,
    ArithmeticMean,
    HarmonicMeanOfExtremes,
    HarmonicMean,
    Minimum,
    Maximum,
}

impl LambdaEffCandidate {
    pub const ALL: [Self; 8] = [
        Self::GeometricMeanOfExtremes,
        Self::GeometricMean,
        Self::ArithmeticMeanOfExtremes,
        Self::ArithmeticMean,
        Self::HarmonicMeanOfExtremes,
        Self::HarmonicMean,
        Self::Minimum,
        Self::Maximum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::GeometricMeanOfExtremes => "geo_extremes",
            Self::GeometricMean => "geo_mean",
            Self::ArithmeticMeanOfExtremes => "arith_extremes",
            Self::ArithmeticMean => "arith_mean",
            Self::HarmonicMeanOfExtremes => "harm_extremes",
            Self::HarmonicMean => "harm_mean",
            Self::Minimum => "min",
            Self::Maximum => "max",
        }
    }

    pub fn evaluate(self, element_lambda: &[f64]) -> f64 {
        let n = element_lambda.len() as f64;
        let (lo, hi) = min_max(element_lambda.iter().copied());
        match self {
            Self::GeometricMeanOfExtremes => (lo * hi).sqrt(),
            Self::GeometricMean => (element_lambda.iter().map(|l| l.ln()).sum::<f64>() / n).exp(),
            Self::ArithmeticMeanOfExtremes => (lo + hi) / 2.0,
            Self::ArithmeticMean => element_lambda.iter().sum::<f64>() / n,
            Self::HarmonicMeanOfExtremes => 2.0 / (1.0 / lo + 1.0 / hi),
            Self::HarmonicMean => n / element_lambda.iter().map(|l| 1.0 / l).sum::<f64>(),
            Self::Minimum => lo,
            Self::Maximum => hi,
        }
    }
}

const DIFFUSIVITY_SCAN_POINTS: usize = 1001;

/// Effective diffusivity that depends only on the material pair:
/// `sqrt(D_SIMP(0) D_SIMP(1))`. Fails when a scan of `D_SIMP` over `[0, 1]` finds
/// values outside the range spanned by the two endpoints.
pub fn design_independent_deff(mat: &MaterialPair) -> Result<f64> {
    let d0 = mat.diffusivity(0.0)?;
    let d1 = mat.diffusivity(1.0)?;
    let (lo, hi) = (d0.min(d1), d0.max(d1));
    let slack = 1e-12 * hi;
    for j in 1..DIFFUSIVITY_SCAN_POINTS - 1 {
        let chi = j as f64 / (DIFFUSIVITY_SCAN_POINTS - 1) as f64;
        let d = mat.diffusivity(chi)?;
        if d < lo - slack || d > hi + slack {
            return Err(Error::InteriorDiffusivityExtremum { chi });
        }
    }
    Ok((d0 * d1).sqrt())
}

/// Which indicator drives the choice of coarsening direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoarseningMode {
    /// `lambda` of a uniform material (taken from the first element).
    Uniform,
    /// `lambda_eff` of the level's (coarsened) materials.
    Contrast,
    /// As `Contrast`, but time coarsening is forced once halving `n_el` would drop
    /// below the given minimum element count.
    Resolution(usize),
    /// `lambda_eff` from the design-independent effective diffusivity of the pair.
    DesignIndependent(MaterialPair),
    /// A path supplied explicitly rather than planned.
    Fixed,
}

impl CoarseningMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Contrast => "contrast",
            Self::Resolution(_) => "resolution",
            Self::DesignIndependent(_) => "design-independent",
            Self::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseningPath {
    pub directions: Vec<CoarseningDirection>,
    pub mode: CoarseningMode,
    pub lambda_crit: f64,
    /// Indicator evaluated on each level that was coarsened (one per direction).
    pub indicators: Vec<f64>,
}

impl CoarseningPath {
    pub fn fixed(directions: Vec<CoarseningDirection>) -> Self {
        Self {
            directions,
            mode: CoarseningMode::Fixed,
            lambda_crit: f64::NAN,
            indicators: Vec::new(),
        }
    }

    pub fn n_levels(&self) -> usize {
        self.directions.len() + 1
    }

    pub fn min_elements(&self) -> Option<usize> {
        match self.mode {
            CoarseningMode::Resolution(m) => Some(m),
            _ => None,
        }
    }
}

/// Comma-separated direction symbols, e.g. `x,x,t,x,t`.
impl fmt::Display for CoarseningPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.directions.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for CoarseningPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::fixed(Vec::new()));
        }
        s.split(',')
            .map(str::parse)
            .collect::<Result<Vec<_>>>()
            .map(Self::fixed)
    }
}

/// Fine level plus what the strategies need to coarsen its materials.
#[derive(Debug, Clone, Copy)]
pub struct PlanInput<'a> {
    pub fine: &'a SpaceTimeGrid,
    pub design: Option<&'a DesignField>,
    pub mat: Option<&'a MaterialPair>,
}

/// Plans `n_levels - 1` coarsening steps from the fine grid.
///
/// Materials are coarsened with the same `reassembly` rule the solver uses, so the
/// indicator on coarse levels reflects the actual coarse materials (projection uses
/// its conductivity-averaged surrogate). When the preferred direction is impossible
/// (odd count), the other direction is taken unless the resolution guard forbids it.
pub fn plan_coarsening(
    input: PlanInput<'_>,
    n_levels: usize,
    lambda_crit: f64,
    mode: CoarseningMode,
    reassembly: ReassemblyMethod,
) -> Result<CoarseningPath> {
    if n_levels == 0 {
        return Err(crate::error::invalid("n_levels", "must be at least 1"));
    }
    if mode == CoarseningMode::Fixed {
        return Err(crate::error::invalid("mode", "a fixed path cannot be planned"));
    }
    let d_fixed = match mode {
        CoarseningMode::DesignIndependent(mat) => Some(design_independent_deff(&mat)?),
        _ => None,
    };
    let mut grid = input.fine.clone();
    let mut design = input.design.cloned();
    let mut directions = Vec::with_capacity(n_levels - 1);
    let mut indicators = Vec::with_capacity(n_levels - 1);

    for level in 1..n_levels {
        let indicator = match mode {
            CoarseningMode::Uniform => {
                let m = grid.materials()?;
                anisotropy(m.conductivity[0] / m.capacity[0], grid.dt(), grid.dx())
            }
            CoarseningMode::Contrast | CoarseningMode::Resolution(_) => {
                effective_lambda(&grid)?.lambda_eff
            }
            CoarseningMode::DesignIndependent(_) => {
                anisotropy(d_fixed.unwrap(), grid.dt(), grid.dx())
            }
            CoarseningMode::Fixed => unreachable!(),
        };
        let guard = matches!(mode, CoarseningMode::Resolution(m) if grid.n_el() < 2 * m);
        let preferred = if indicator < lambda_crit || guard {
            CoarseningDirection::TimeT
        } else {
            CoarseningDirection::SpaceX
        };
        let other = match preferred {
            CoarseningDirection::TimeT => CoarseningDirection::SpaceX,
            _ => CoarseningDirection::TimeT,
        };
        let dir = if grid.can_coarsen(preferred) {
            preferred
        } else if !guard && grid.can_coarsen(other) {
            other
        } else {
            return Err(Error::CoarseningExhausted {
                level,
                n_el: grid.n_el(),
                n_t: grid.n_t(),
            });
        };

        let needs_materials = !matches!(mode, CoarseningMode::DesignIndependent(_));
        let mut next = grid.coarsen(dir)?;
        if needs_materials {
            let cm = coarsen_materials(&grid, dir, reassembly, design.as_ref(), input.mat)?;
            next.set_materials(cm.materials)?;
            design = cm.design;
        }
        directions.push(dir);
        indicators.push(indicator);
        grid = next;
    }
    Ok(CoarseningPath {
        directions,
        mode,
        lambda_crit,
        indicators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{design_ramp, MaterialPair};
    use crate::mesh::ElementMaterials;
    use approx::assert_relative_eq;
    use CoarseningDirection::*;

    fn uniform_grid(n: usize, t_t: f64) -> SpaceTimeGrid {
        SpaceTimeGrid::geometry(1.0, t_t, n, n)
            .unwrap()
            .with_materials(ElementMaterials::uniform(n, 1.0, 1.0))
            .unwrap()
    }

    fn problem7(n: usize, t_t: f64) -> (SpaceTimeGrid, DesignField, MaterialPair) {
        let mat = MaterialPair::aluminium_epoxy();
        let g = SpaceTimeGrid::geometry(0.1, t_t, n, n).unwrap();
        let d = design_ramp(&g, 5.0 / 0.1, 0.05).unwrap();
        let g = g.with_materials(mat.materials_for(&d)).unwrap();
        (g, d, mat)
    }

    #[test]
    fn anisotropy_values() {
        assert_eq!(anisotropy(1.0, 2f64.powi(-16), 2f64.powi(-8)), 1.0);
        assert_eq!(anisotropy(1.0, 2.0, 1.0), 2.0 * anisotropy(1.0, 1.0, 1.0));
        assert_eq!(anisotropy(1.0, 1.0, 2.0), anisotropy(1.0, 1.0, 1.0) / 4.0);
        let g = uniform_grid(256, 4.0);
        assert_eq!(effective_lambda(&g).unwrap().lambda_eff, 1024.0);
    }

    #[test]
    fn effective_lambda_of_test_problems() {
        let (g, _, _) = problem7(256, 10.0);
        let r = effective_lambda(&g).unwrap();
        assert!((r.lambda_eff - 0.83).abs() < 0.01, "{}", r.lambda_eff);
        assert!(r.lambda_min <= r.lambda_eff && r.lambda_eff <= r.lambda_max);
        let (g, _, _) = problem7(256, 100.0);
        assert!((effective_lambda(&g).unwrap().lambda_eff - 8.3).abs() < 0.1);
    }

    #[test]
    fn design_independent_diffusivity() {
        let same = MaterialPair::new(2.0, 2.0, 4.0, 4.0).unwrap();
        assert_eq!(design_independent_deff(&same).unwrap(), 0.5);
        let m = MaterialPair::aluminium_epoxy();
        let d = design_independent_deff(&m).unwrap();
        assert_relative_eq!(d, (0.197 / 1.67e6 * 214.0 / 2.41e6f64).sqrt(), max_relative = 1e-14);
        assert!((d - 3.24e-6).abs() < 0.01e-6);
        let equal_endpoints = MaterialPair::new(1e-4, 1.0, 1e-4, 1.0).unwrap();
        assert!(matches!(
            design_independent_deff(&equal_endpoints),
            Err(Error::InteriorDiffusivityExtremum { .. })
        ));
    }

    #[test]
    fn candidates_on_known_values() {
        let l = [1.0, 4.0, 16.0];
        use LambdaEffCandidate::*;
        assert_relative_eq!(GeometricMeanOfExtremes.evaluate(&l), 4.0);
        assert_relative_eq!(GeometricMean.evaluate(&l), 4.0, max_relative = 1e-14);
        assert_relative_eq!(ArithmeticMeanOfExtremes.evaluate(&l), 8.5);
        assert_relative_eq!(ArithmeticMean.evaluate(&l), 7.0);
        assert_relative_eq!(HarmonicMeanOfExtremes.evaluate(&l), 32.0 / 17.0);
        assert_relative_eq!(HarmonicMean.evaluate(&l), 3.0 / (1.0 + 0.25 + 1.0 / 16.0));
        assert_eq!(Minimum.evaluate(&l), 1.0);
        assert_eq!(Maximum.evaluate(&l), 16.0);
    }

    #[test]
    fn uniform_large_lambda_coarsens_space() {
        let g = uniform_grid(256, 4.0);
        let input = PlanInput { fine: &g, design: None, mat: None };
        let p = plan_coarsening(input, 2, 0.25, CoarseningMode::Uniform, ReassemblyMethod::Conductivity)
            .unwrap();
        assert_eq!(p.directions, vec![SpaceX]);
        assert_eq!(p.to_string(), "x");
        let p = plan_coarsening(input, 1, 0.25, CoarseningMode::Uniform, ReassemblyMethod::Conductivity)
            .unwrap();
        assert!(p.directions.is_empty());
    }

    #[test]
    fn contrast_mode_mixes_directions_on_problem7() {
        let (g, d, m) = problem7(256, 10.0);
        let input = PlanInput { fine: &g, design: Some(&d), mat: Some(&m) };
        let p = plan_coarsening(input, 6, 0.25, CoarseningMode::Contrast, ReassemblyMethod::Conductivity)
            .unwrap();
        assert!(p.directions.contains(&SpaceX) && p.directions.contains(&TimeT));
        assert_eq!(p.directions[0], SpaceX);
    }

    #[test]
    fn resolution_guard_caps_space_coarsening() {
        let g = uniform_grid(256, 4.0);
        let input = PlanInput { fine: &g, design: None, mat: None };
        let p = plan_coarsening(input, 6, 0.25, CoarseningMode::Resolution(32), ReassemblyMethod::Conductivity)
            .unwrap();
        assert_eq!(p.to_string(), "x,x,x,t,t");
        assert_eq!(p.min_elements(), Some(32));
    }

    #[test]
    fn contrast_reduces_to_uniform_for_uniform_materials() {
        for t_t in [2f64.powi(-14), 2f64.powi(-10), 2f64.powi(-6), 1.0] {
            let g = uniform_grid(64, t_t);
            let input = PlanInput { fine: &g, design: None, mat: None };
            let a = plan_coarsening(input, 5, 0.25, CoarseningMode::Uniform, ReassemblyMethod::Conductivity).unwrap();
            let b = plan_coarsening(input, 5, 0.25, CoarseningMode::Contrast, ReassemblyMethod::Conductivity).unwrap();
            assert_eq!(a.directions, b.directions);
        }
    }

    #[test]
    fn exhausted_coarsening_is_an_error() {
        let g = SpaceTimeGrid::geometry(1.0, 1.0, 2, 2)
            .unwrap()
            .with_materials(ElementMaterials::uniform(2, 1.0, 1.0))
            .unwrap();
        let input = PlanInput { fine: &g, design: None, mat: None };
        let err = plan_coarsening(input, 4, 0.25, CoarseningMode::Uniform, ReassemblyMethod::Conductivity);
        assert!(matches!(err, Err(Error::CoarseningExhausted { level: 3, .. })));
        // resolution guard forbids the space fallback
        let g = SpaceTimeGrid::geometry(1.0, 1.0, 8, 1)
            .unwrap()
            .with_materials(ElementMaterials::uniform(8, 1.0, 1.0))
            .unwrap();
        let input = PlanInput { fine: &g, design: None, mat: None };
        assert!(plan_coarsening(input, 2, 0.25, CoarseningMode::Resolution(8), ReassemblyMethod::Conductivity).is_err());
        assert!(plan_coarsening(input, 2, 0.25, CoarseningMode::Contrast, ReassemblyMethod::Conductivity).is_ok());
    }

    #[test]
    fn design_independent_path_ignores_design() {
        let m = MaterialPair::aluminium_epoxy();
        let (g1, d1, _) = problem7(256, 10.0);
        let g2 = SpaceTimeGrid::geometry(0.1, 10.0, 256, 256).unwrap();
        let d2 = DesignField::uniform(256, 0.5).unwrap();
        let g2 = g2.with_materials(m.materials_for(&d2)).unwrap();
        let mode = CoarseningMode::DesignIndependent(m);
        let a = plan_coarsening(PlanInput { fine: &g1, design: Some(&d1), mat: Some(&m) }, 6, 0.25, mode, ReassemblyMethod::Resistivity).unwrap();
        let b = plan_coarsening(PlanInput { fine: &g2, design: Some(&d2), mat: Some(&m) }, 6, 0.25, mode, ReassemblyMethod::Resistivity).unwrap();
        assert_eq!(a.directions, b.directions);
        assert_eq!(a.to_string(), "x,t,x,t,t");
    }

    #[test]
    fn path_text_round_trip() {
        let p: CoarseningPath = "x, t,x,f".parse().unwrap();
        assert_eq!(p.directions, vec![SpaceX, TimeT, SpaceX, FullST]);
        assert_eq!(p.to_string(), "x,t,x,f");
        assert_eq!("".parse::<CoarseningPath>().unwrap().n_levels(), 1);
        assert!("x,,t".parse::<CoarseningPath>().is_err());
        assert!("x;t".parse::<CoarseningPath>().is_err());
    }
}
