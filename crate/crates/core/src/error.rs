use thiserror::Error;

use crate::mesh::CoarseningDirection;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot coarsen grid with {n_el} elements and {n_t} time steps in direction {direction}")]
    IllegalCoarsening {
        direction: CoarseningDirection,
        n_el: usize,
        n_t: usize,
    },

    #[error("grid has no material arrays")]
    MissingMaterials,

    #[error("design-field averaging needs a design field and a material pair on every level")]
    MissingDesign,

    #[error("full space-time coarsening is only defined for causal interpolation")]
    UnsupportedTransfer,

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("matrix is singular (pivot {pivot:e} in column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("no coarsening direction is possible at level {level} ({n_el} elements, {n_t} time steps)")]
    CoarseningExhausted { level: usize, n_el: usize, n_t: usize },

    #[error("diffusivity of the SIMP interpolation has an interior extremum near chi = {chi}")]
    InteriorDiffusivityExtremum { chi: f64 },

    #[error("residual history is empty")]
    EmptyHistory,

    #[error("MMA subproblem did not converge after {0} bisection steps")]
    SubproblemNotConverged(usize),

    #[error("multigrid diverged during optimisation cycle {cycle} ({which} solve, residual {residual:e})")]
    SolverDiverged {
        cycle: usize,
        which: &'static str,
        residual: f64,
    },

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
