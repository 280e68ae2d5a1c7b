//! Prolongation and restriction between consecutive space-time levels.

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::{CoarseningDirection, SpaceTimeGrid};
use crate::sparse::SparseMatrix;

/// How coarse temperatures are interpolated onto the fine grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterpolationMethod {
    /// Time coarsening copies a coarse value forward to the next fine time point only.
    Causal,
    /// Time coarsening interpolates linearly between neighbouring coarse time points.
    Bilinear,
}

impl InterpolationMethod {
    pub fn letter(self) -> char {
        match self {
            Self::Causal => 'C',
            Self::Bilinear => 'B',
        }
    }
}

impl fmt::Display for InterpolationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Scale `s` in `R = s P^T`.
pub fn restriction_scale(dir: CoarseningDirection) -> f64 {
    match dir {
        CoarseningDirection::SpaceX => 1.0,
        CoarseningDirection::TimeT | CoarseningDirection::FullST => 0.5,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferPair {
    /// Fine rows by coarse columns.
    pub prolongation: SparseMatrix,
    /// Coarse rows by fine columns.
    pub restriction: SparseMatrix,
    pub scale: f64,
    pub direction: CoarseningDirection,
}

impl TransferPair {
    pub fn build(
        fine: &SpaceTimeGrid,
        coarse: &SpaceTimeGrid,
        dir: CoarseningDirection,
        interp: InterpolationMethod,
    ) -> Result<Self> {
        let prolongation = build_prolongation(fine, coarse, dir, interp)?;
        let restriction = build_restriction(&prolongation, dir);
        Ok(Self {
            prolongation,
            restriction,
            scale: restriction_scale(dir),
            direction: dir,
        })
    }
}

fn stencil_1d(coarse_index: usize, fine_max: usize, coarsened: bool, weights: &[(isize, f64)]) -> Vec<(usize, f64)> {
    if !coarsened {
        return vec![(coarse_index, 1.0)];
    }
    weights
        .iter()
        .filter_map(|&(offset, w)| {
            let f = 2 * coarse_index as isize + offset;
            (f >= 0 && f as usize <= fine_max).then_some((f as usize, w))
        })
        .collect()
}

const SPACE_WEIGHTS: [(isize, f64); 3] = [(-1, 0.5), (0, 1.0), (1, 0.5)];
const CAUSAL_TIME_WEIGHTS: [(isize, f64); 2] = [(0, 1.0), (1, 1.0)];
const BILINEAR_TIME_WEIGHTS: [(isize, f64); 3] = [(-1, 0.5), (0, 1.0), (1, 0.5)];

/// Prolongation `P` (fine by coarse). Stencils are truncated at the domain edges.
pub fn build_prolongation(
    fine: &SpaceTimeGrid,
    coarse: &SpaceTimeGrid,
    dir: CoarseningDirection,
    interp: InterpolationMethod,
) -> Result<SparseMatrix> {
    if dir == CoarseningDirection::FullST && interp == InterpolationMethod::Bilinear {
        return Err(Error::UnsupportedTransfer);
    }
    let expected = fine.coarsen(dir)?;
    if (expected.n_el(), expected.n_t()) != (coarse.n_el(), coarse.n_t()) {
        return Err(Error::DimensionMismatch(format!(
            "coarse grid {}x{} does not match {}x{} coarsened in {dir}",
            coarse.n_el(),
            coarse.n_t(),
            fine.n_el(),
            fine.n_t()
        )));
    }
    let time_weights: &[(isize, f64)] = match interp {
        InterpolationMethod::Causal => &CAUSAL_TIME_WEIGHTS,
        InterpolationMethod::Bilinear => &BILINEAR_TIME_WEIGHTS,
    };
    let mut triplets = Vec::with_capacity(6 * coarse.n_dofs());
    for big_n in 0..=coarse.n_t() {
        let times = stencil_1d(big_n, fine.n_t(), dir.coarsens_time(), time_weights);
        for big_i in 0..=coarse.n_el() {
            let nodes = stencil_1d(big_i, fine.n_el(), dir.coarsens_space(), &SPACE_WEIGHTS);
            let col = coarse.dof(big_n, big_i);
            for &(n, wt) in &times {
                for &(i, wx) in &nodes {
                    triplets.push((fine.dof(n, i), col, wt * wx));
                }
            }
        }
    }
    SparseMatrix::from_triplets(fine.n_dofs(), coarse.n_dofs(), triplets)
}

/// Restriction `R = s P^T`.
pub fn build_restriction(prolongation: &SparseMatrix, dir: CoarseningDirection) -> SparseMatrix {
    prolongation.transpose().scaled(restriction_scale(dir))
}
