//! Numerical laboratory for distributed-order fractional Fokker-Planck-Kolmogorov
//! equations on a bounded interval.
//!
//! The generator is a one-dimensional Waldenfels operator (diffusion, drift,
//! killing and a finite-activity jump integral) closed by Wentcel-type
//! boundary rows. Fractional solutions are computed by several independent
//! routes (implicit L1 stepping, subordination through the inverse
//! subordinator density, eigenfunction expansion with Mittag-Leffler modes)
//! and cross-checked against Monte Carlo simulation of the time-changed
//! process.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod error;
pub mod fractional;
pub mod harness;
pub mod laplace;
pub mod mixing;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod solvers;
pub mod spatial;
pub mod special;
pub mod subordinators;

pub use error::{Error, Result};
pub use mixing::MixingMeasure;
