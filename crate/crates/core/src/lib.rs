//! Monte Carlo estimation of two-qubit separability probabilities.
//!
//! States are drawn from the Hilbert-Schmidt or Bures ensemble, classified
//! with the partial-transpose test and weighted by one of several
//! importance weights built from the spectrum, the eigenvectors and the
//! volume of the quantum steering ellipsoid. The weighted separable fraction
//! is accumulated in mergeable per-chunk accumulators.

// `!(x >= y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod qes;
pub mod report;
pub mod selftest;
pub mod state;

pub use error::{Error, Result};
