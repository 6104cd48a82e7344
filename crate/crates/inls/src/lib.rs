//! Numerical laboratory for the focusing inhomogeneous nonlinear Schrödinger equation
//! `i∂ₜu + Δu = −|x|^{−b}|u|^α u` in the intercritical regime.

// `!(x > 0.0)` rejects NaN on purpose; banded kernels index several arrays per loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
