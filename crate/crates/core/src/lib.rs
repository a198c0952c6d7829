//! Invariant full-covariance evolution strategy (SynCMA) with exactly evolved
//! history terms, a textbook CMA-ES baseline, synthetic benchmark functions,
//! a brute-force oracle for the memory recurrences, and a trial harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmaes;
pub mod diagnostics;
pub mod error;
pub mod fitness;
pub mod gaussian;
pub mod harness;
pub mod objectives;
pub mod oracle;
pub mod syncma;

pub use error::{Error, Result};
pub use gaussian::{GaussianParams, Matrix, Vector};
pub use syncma::{SynCma, SynCmaConfig};
