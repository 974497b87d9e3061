//! Scan statistics of marked Poisson fields.
//!
//! For a Poisson field of rate `lambda` with i.i.d. marks, the scan statistic
//! `sup_v S(v + B)` over translates of a convex kernel `B` exceeds `lambda c`
//! with a probability that decays like `exp(-lambda I)` up to a polynomial
//! factor and a constant `K` determined by a local field at the boundary of `B`.
//! This crate computes that approximation, several independent routes to `K`,
//! the overshoot constant, brute-force Monte Carlo oracles, and the analogous
//! constants for smooth Gaussian fields.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod error;
pub mod gauss;
pub mod geometry;
pub mod marks;
pub mod local_field;
pub mod constants;
pub mod mc;
pub mod overshoot;
pub mod mc_oracle;
pub mod tail_approx;

pub use error::{Result, ScanError};
pub use geometry::{Kernel, KernelSpec};
pub use marks::{solve_tilt, MarkLaw, MarkSpec, TiltSolution};
pub use mc::McEstimate;
