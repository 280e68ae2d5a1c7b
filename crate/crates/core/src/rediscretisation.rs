//! Coarse-level materials and system matrices for the four reassembly rules.

use std::fmt;
use std::str::FromStr;

use crate::assembly::{assemble_system, dirichlet_mask, AssembledSystem};
use crate::error::{Error, Result};
use crate::materials::{clamp01, DesignField, MaterialPair};
use crate::mesh::{CoarseningDirection, ElementMaterials, SpaceTimeGrid};
use crate::sparse::SparseMatrix;
use crate::transfer::{InterpolationMethod, TransferPair};

/// How the system matrix of a coarse level is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReassemblyMethod {
    /// Arithmetic mean of conductivity and capacity.
    Conductivity,
    /// Arithmetic mean of the design field, then SIMP.
    Design,
    /// Arithmetic mean of resistivity (harmonic mean of conductivity).
    Resistivity,
    /// Galerkin projection `R J P`.
    Projection,
}

impl ReassemblyMethod {
    pub fn letter(self) -> char {
        match self {
            Self::Conductivity => 'K',
            Self::Design => 'D',
            Self::Resistivity => 'R',
            Self::Projection => 'P',
        }
    }
}

/// An interpolation rule paired with a reassembly rule, named by two letters (`"CR"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RediscretisationMethod {
    pub interp: InterpolationMethod,
    pub reassembly: ReassemblyMethod,
}

impl RediscretisationMethod {
    pub const fn new(interp: InterpolationMethod, reassembly: ReassemblyMethod) -> Self {
        Self { interp, reassembly }
    }

    /// All eight combinations in the order C{K,D,R,P}, B{K,D,R,P}.
    pub fn all() -> [Self; 8] {
        use InterpolationMethod::*;
        use ReassemblyMethod::*;
        [
            Self::new(Causal, Conductivity),
            Self::new(Causal, Design),
            Self::new(Causal, Resistivity),
            Self::new(Causal, Projection),
            Self::new(Bilinear, Conductivity),
            Self::new(Bilinear, Design),
            Self::new(Bilinear, Resistivity),
            Self::new(Bilinear, Projection),
        ]
    }

    /// Bilinear interpolation with Galerkin projection blows up on deep hierarchies.
    pub fn is_known_unstable(&self) -> bool {
        self.interp == InterpolationMethod::Bilinear
            && self.reassembly == ReassemblyMethod::Projection
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.interp.letter(), self.reassembly.letter())
    }
}

impl fmt::Display for RediscretisationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.interp.letter(), self.reassembly.letter())
    }
}

impl FromStr for RediscretisationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse {
            what: "rediscretisation method",
            input: s.to_string(),
        };
        let mut chars = s.trim().chars();
        let (Some(a), Some(b), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(err());
        };
        let interp = match a.to_ascii_uppercase() {
            'C' => InterpolationMethod::Causal,
            'B' => InterpolationMethod::Bilinear,
            _ => return Err(err()),
        };
        let reassembly = match b.to_ascii_uppercase() {
            'K' => ReassemblyMethod::Conductivity,
            'D' => ReassemblyMethod::Design,
            'R' => ReassemblyMethod::Resistivity,
            'P' => ReassemblyMethod::Projection,
            _ => return Err(err()),
        };
        Ok(Self { interp, reassembly })
    }
}

/// Materials of a coarse level. For the projection method these are only the
/// conductivity-averaged surrogate used by the coarsening strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseMaterials {
    pub materials: ElementMaterials,
    pub design: Option<DesignField>,
}

/// Coarse element materials after coarsening `fine` in direction `dir`.
///
/// Time coarsening copies everything. Space (and full) coarsening merges element
/// pairs `(2e, 2e+1)` according to `method`.
pub fn coarsen_materials(
    fine: &SpaceTimeGrid,
    dir: CoarseningDirection,
    method: ReassemblyMethod,
    design: Option<&DesignField>,
    mat: Option<&MaterialPair>,
) -> Result<CoarseMaterials> {
    let fm = fine.materials()?;
    if method == ReassemblyMethod::Design && (design.is_none() || mat.is_none()) {
        return Err(Error::MissingDesign);
    }
    if let Some(d) = design {
        if d.len() != fine.n_el() {
            return Err(Error::DimensionMismatch(format!(
                "design field has {} entries, grid has {} elements",
                d.len(),
                fine.n_el()
            )));
        }
    }
    if !dir.coarsens_space() {
        return Ok(CoarseMaterials {
            materials: fm.clone(),
            design: design.cloned(),
        });
    }
    if !fine.can_coarsen(dir) {
        return Err(Error::IllegalCoarsening {
            direction: dir,
            n_el: fine.n_el(),
            n_t: fine.n_t(),
        });
    }

    let pairs = |v: &[f64], f: fn(f64, f64) -> f64| -> Vec<f64> {
        v.chunks_exact(2).map(|p| f(p[0], p[1])).collect()
    };
    let mean = |a: f64, b: f64| (a + b) / 2.0;
    let harmonic = |a: f64, b: f64| 2.0 * a * b / (a + b);

    let coarse_design = design.map(|d| {
        DesignField::new(pairs(d.values(), |a, b| clamp01((a + b) / 2.0)))
            .expect("clamped averages are box constrained")
    });
    let materials = match method {
        ReassemblyMethod::Conductivity | ReassemblyMethod::Projection => ElementMaterials {
            conductivity: pairs(&fm.conductivity, mean),
            capacity: pairs(&fm.capacity, mean),
        },
        ReassemblyMethod::Resistivity => ElementMaterials {
            conductivity: pairs(&fm.conductivity, harmonic),
            capacity: pairs(&fm.capacity, mean),
        },
        ReassemblyMethod::Design => {
            let (d, m) = (coarse_design.as_ref().unwrap(), mat.unwrap());
            m.materials_for(d)
        }
    };
    Ok(CoarseMaterials {
        materials,
        design: coarse_design,
    })
}

/// Coarse-level system. Averaging methods reassemble on `coarse` (which must carry
/// its materials); projection forms `R J P`, whose right-hand side is never used.
pub fn coarse_system(
    fine_sys: &AssembledSystem,
    pair: &TransferPair,
    coarse: &SpaceTimeGrid,
    method: ReassemblyMethod,
) -> Result<AssembledSystem> {
    let (p, r) = (&pair.prolongation, &pair.restriction);
    if p.n_rows() != fine_sys.n_dofs() || p.n_cols() != coarse.n_dofs() || r.n_rows() != coarse.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "transfer operators {}x{} do not connect {} fine and {} coarse unknowns",
            p.n_rows(),
            p.n_cols(),
            fine_sys.n_dofs(),
            coarse.n_dofs()
        )));
    }
    match method {
        ReassemblyMethod::Projection => Ok(AssembledSystem {
            matrix: SparseMatrix::triple_product(r, &fine_sys.matrix, p)?,
            rhs: vec![0.0; coarse.n_dofs()],
            w_diri: fine_sys.w_diri,
            dirichlet_mask: dirichlet_mask(coarse),
        }),
        _ => assemble_system(coarse),
    }
}
