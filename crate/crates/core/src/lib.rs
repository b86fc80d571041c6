//! Numerical toolkit for the planar L_p Gaussian Minkowski problem.
//!
//! Convex bodies are represented by support functions sampled on a uniform
//! grid of the unit circle. On top of that the crate provides Gaussian volume
//! and the L_p Gaussian surface-area measure, a projected-gradient solver for
//! the even problem with `p <= 0`, a Newton continuation solver for `p >= 1`,
//! and property suites that check the geometric identities and inequalities
//! these rest on.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod cli;
pub mod continuation;
pub mod error;
pub mod gauss;
pub mod grid;
pub mod hull;
pub mod io;
pub mod measure;
pub mod variational;
pub mod verify;

pub use body::{Body, BoundaryPoint};
pub use error::{Error, Result};
pub use grid::{Grid, ScalarField};
pub use measure::MeasureDensity;
