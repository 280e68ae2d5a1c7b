//! Named test problems.

use crate::error::{invalid, Error, Result};
use crate::materials::{design_gap, design_ramp, DesignField, MaterialPair};
use crate::mesh::{ElementMaterials, SpaceTimeGrid};

pub const DEFAULT_RESOLUTION: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignKind {
    /// Uniform material, no design field.
    Uniform { conductivity: f64, capacity: f64 },
    /// `clamp01(1/2 - alpha (x - x_offset))`.
    Ramp { alpha: f64, x_offset: f64 },
    /// Insulating gap of width fraction `fraction`; `inverted` swaps the roles.
    Gap { fraction: f64, inverted: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub id: u8,
    pub length: f64,
    pub final_time: f64,
    /// Inclusive `t_T` range swept in the contrast study.
    pub final_time_range: Option<(f64, f64)>,
    pub design: DesignKind,
    pub material_pair: Option<MaterialPair>,
}

/// A problem discretised on a concrete grid.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub problem: Problem,
    pub grid: SpaceTimeGrid,
    pub design: Option<DesignField>,
    pub material_pair: Option<MaterialPair>,
}

fn nondimensional(id: u8, k_ins: f64, c_ins: f64, x_offset: f64, lo: i32, hi: i32) -> Problem {
    Problem {
        id,
        length: 1.0,
        final_time: 2f64.powf(f64::from(lo + hi) / 2.0),
        final_time_range: Some((2f64.powi(lo), 2f64.powi(hi))),
        design: DesignKind::Ramp { alpha: 10.0, x_offset },
        material_pair: Some(MaterialPair::new(k_ins, 1.0, c_ins, 1.0).expect("positive constants")),
    }
}

fn dimensional(id: u8, final_time: f64, design: DesignKind) -> Problem {
    Problem {
        id,
        length: 0.1,
        final_time,
        final_time_range: None,
        design,
        material_pair: Some(MaterialPair::aluminium_epoxy()),
    }
}

pub const GAP_FRACTION: f64 = 0.03;

impl Problem {
    pub fn preset(id: u8) -> Result<Self> {
        Ok(match id {
            0 => Problem {
                id,
                length: 1.0,
                final_time: 2f64.powi(-8),
                final_time_range: Some((2f64.powi(-18), 2f64.powi(2))),
                design: DesignKind::Uniform { conductivity: 1.0, capacity: 1.0 },
                material_pair: None,
            },
            1 => nondimensional(id, 1e-2, 1.0, 0.5, -10, -2),
            2 => nondimensional(id, 1e-4, 1.0, 0.5, -7, 1),
            3 => nondimensional(id, 1e-4, 1.0, 0.15, -7, 1),
            4 => nondimensional(id, 1e-4, 1.0, 0.85, -7, 1),
            5 => nondimensional(id, 1.0, 1e-4, 0.5, -20, -12),
            6 => nondimensional(id, 1e-4, 1e-4, 0.5, -12, -4),
            7 => dimensional(id, 10.0, DesignKind::Ramp { alpha: 5.0 / 0.1, x_offset: 0.05 }),
            8 => dimensional(id, 100.0, DesignKind::Gap { fraction: GAP_FRACTION, inverted: false }),
            9 => dimensional(id, 100.0, DesignKind::Gap { fraction: GAP_FRACTION, inverted: true }),
            _ => return Err(invalid("problem", format!("{id} is not one of 0..=9"))),
        })
    }

    pub fn with_final_time(mut self, final_time: f64) -> Self {
        self.final_time = final_time;
        self
    }

    /// Changes the gap width of a gap problem.
    pub fn with_gap_fraction(mut self, fraction: f64) -> Result<Self> {
        match &mut self.design {
            DesignKind::Gap { fraction: f, .. } => {
                *f = fraction;
                Ok(self)
            }
            _ => Err(invalid("gap fraction", format!("problem {} has no gap", self.id))),
        }
    }

    pub fn instantiate(&self, n_el: usize, n_t: usize) -> Result<ProblemInstance> {
        let geometry = SpaceTimeGrid::geometry(self.length, self.final_time, n_el, n_t)?;
        let (design, materials) = match self.design {
            DesignKind::Uniform { conductivity, capacity } => {
                (None, ElementMaterials::uniform(n_el, conductivity, capacity))
            }
            DesignKind::Ramp { alpha, x_offset } => {
                let d = design_ramp(&geometry, alpha, x_offset)?;
                let m = self.pair()?.materials_for(&d);
                (Some(d), m)
            }
            DesignKind::Gap { fraction, inverted } => {
                let d = design_gap(&geometry, fraction, inverted)?;
                let m = self.pair()?.materials_for(&d);
                (Some(d), m)
            }
        };
        Ok(ProblemInstance {
            problem: *self,
            grid: geometry.with_materials(materials)?,
            design,
            material_pair: self.material_pair,
        })
    }

    fn pair(&self) -> Result<MaterialPair> {
        self.material_pair.ok_or(Error::MissingMaterials)
    }
}
