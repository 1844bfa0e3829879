//! Numerical laboratory for the 1-D stochastic wave equation driven by noise
//! that is white in time and Riesz-correlated in space.
//!
//! * [`riesz`]: exact covariances of the noise and the solution field.
//! * [`sampler`]: exact Gaussian sampling on grids.
//! * [`gaussian`]: scalar Gaussian identities (tails, orthants, Slepian).
//! * [`lil`]: iterated-logarithm statistics, singularity location and the
//!   propagation experiment.
//! * [`runner`]: configuration and the command pipelines behind the CLI.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod gaussian;
pub mod lil;
pub mod quadrature;
pub mod riesz;
pub mod runner;
pub mod sampler;

pub use error::{LabError, Result};
