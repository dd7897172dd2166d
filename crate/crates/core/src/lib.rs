//! Lattice laboratory for locally covariant free quantum fields on 1+1
//! globally hyperbolic spacetimes.
//!
//! The crate covers causal structure on a light-cone lattice, deformation
//! of spacetimes with a flat past pocket, Klein-Gordon and Majorana-Dirac
//! propagators with their CCR/CAR representations, nets of local algebras
//! with their covariance maps, and a pipeline that exercises each link of
//! the spin-statistics argument at desk scale.

// `!(x >= 0.0)` rejects NaN on purpose; stencil loops index several
// slices at once; stage errors carry their partial results.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::result_large_err)]

pub mod causal;
pub mod deformation;
pub mod diracfield;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod netfunctor;
pub mod scalarfield;
pub mod spin;

pub use error::{Error, Result};
