//! Numerical laboratory for the adiabatic limit of thin fibre bundles over a
//! circle: discrete Laplace–Beltrami operators of the shrinking-fibre metric
//! family, their low spectrum, the effective base operator `H₀`, and the
//! nodal geometry of eigenfunctions.

// guards of the form `!(x > 0.0)` are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod eigensolve;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod nodal;
pub mod operators;

pub use error::{Error, Result};
