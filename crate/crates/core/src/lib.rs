//! Generalized randomized SVD with multivariate Gaussian sketches.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! * [`covariance`]: closed-form and Mercer covariance kernels (squared
//!   exponential, periodic, weighted Jacobi, Laplacian Green), designed
//!   eigenvalue sequences and discretization on quadrature grids.
//! * [`sampling`]: factoring covariances and drawing multivariate Gaussian
//!   matrices and Gaussian-process sample paths.
//! * [`sketch`]: the randomized range finder with structured Gaussian test
//!   matrices, the covariance quality factors and probabilistic error bounds,
//!   and Monte-Carlo checks of the supporting lemmas.
//! * [`hsop`]: discretized Hilbert–Schmidt integral operators and the
//!   randomized SVD acting on them.
//!
//! File formats, experiment drivers and the command line live in the
//! companion `gsketch` crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod covariance;
pub mod error;
pub mod hsop;
pub mod linalg;
pub mod quadrature;
pub mod sampling;
pub mod sketch;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
