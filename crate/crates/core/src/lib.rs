//! Space-time multigrid for the all-at-once backward-Euler heat equation with
//! SIMP-interpolated materials, plus the adjoint and MMA pieces of a transient
//! topology optimisation loop.

pub mod assembly;
pub mod direct;
pub mod error;
pub mod materials;
pub mod mesh;
pub mod mma;
pub mod multigrid;
pub mod optimisation;
pub mod oracle;
pub mod problems;
pub mod rediscretisation;
pub mod sparse;
pub mod strategy;
pub mod transfer;

pub use error::{Error, Result};
