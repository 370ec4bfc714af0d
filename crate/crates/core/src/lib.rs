//! Numerical laboratory for positive solutions of
//! `Δu + a·u·log u + b·u = 0` and `(Δ − ∂t)u + a·u·log u + b·u = 0`
//! on rotationally symmetric model manifolds, together with pointwise
//! checks of the associated gradient estimates.

pub mod cli;
pub mod cutoff;
pub mod elliptic;
pub mod error;
pub mod estimates;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod parabolic;
pub mod verify;

pub use error::{Error, Result};
