//! Completion of N-dimensional sums of (damped) complex exponentials from a
//! subset of their samples.
//!
//! The signal tensor is modelled by a low-rank CP decomposition. Every factor
//! column is lifted to a Hankel matrix whose nuclear norm is penalized, and the
//! resulting problem is solved with an ADMM-style splitting ([`solver`]). A
//! weighted CP completion baseline without the Hankel term lives in
//! [`baselines`].
//!
//! Tensors are stored flat with the first index varying fastest; all modes and
//! indices are zero-based.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod hankel;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod selftest;
pub mod signal;
pub mod solver;
pub mod svt;
pub mod tensor;

pub use error::{Error, Result};
pub use solver::{solve, SolveResult, SolverConfig};
pub use tensor::{CMatrix, ComplexTensor, CpFactors, SamplingMask, C64};
