//! Scaled-range distribution of a one-parameter family of self-interacting
//! walks on the integer lattice, at exit from [-2^N, 2^N].
//!
//! The limit CDF f_u solves a de Rham functional equation driven by two
//! Möbius maps; this crate evaluates f_u exactly (dyadic tables, digit
//! composition, matrix products), samples the finite-level range law by a
//! hierarchical Monte Carlo scheme, and computes the regularity diagnostics
//! of the measure (singularity criterion, atoms, entropy dimension bounds).

// Range guards are written `!(a < x && x < b)` on purpose: NaN fails the
// inner comparisons and is rejected, which `x <= a || x >= b` would not do.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference constants are frozen from a 40-digit computation; the digits
// beyond f64 resolution document the true value.
#![allow(clippy::excessive_precision)]

pub mod analysis;
pub mod cdf;
pub mod dd;
pub mod dyadic;
pub mod empirics;
pub mod error;
pub mod mobius;
pub mod rng;
pub mod selftest;
pub mod walk;

pub use cdf::{CdfTable, DeRhamModel};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use mobius::Matrix2;
pub use walk::DepthHistogram;
