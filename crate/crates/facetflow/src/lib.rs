//! Regularized crystal-surface relaxation in two dimensions.
//!
//! The stationary problem couples a height `u`, an auxiliary potential `v`
//! and a unit-ball field `h` selecting the subgradient of `|grad u|` on facets:
//!
//! ```text
//! -div(D(grad u) grad v) + a u = f
//! -div(|grad u|^(p-2) grad u + beta h) = v
//! ```
//!
//! with zero-flux boundaries on a rectangle. The crate solves the
//! `tau`-regularized system, drives `tau` towards zero by continuation, steps
//! the backward-Euler evolution built on it, and reports discrete versions of
//! the a priori bounds the continuous theory provides.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod run;
pub mod scheme;
pub mod usolver;
pub mod vsolver;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, TensorField, VectorField};
pub use model::{Mat2, ModelParams, Vec2};
