//! Noncolliding continuous-time simple symmetric random walks on `Z`.
//!
//! The system of walks conditioned never to collide is a determinantal
//! process. This crate evaluates its correlation kernels (finite initial
//! configurations, the equidistant lattice `aZ`, and the stationary sine-kernel
//! process), builds correlation functions and Fredholm generating functions
//! from them, and checks all of it against two Monte Carlo estimators and a
//! relaxation diagnostic.

pub mod bessel;
pub mod correlations;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod martingale;
pub mod montecarlo;
pub mod quadrature;
pub mod relaxation;

pub use error::{Error, Result};

/// Numerical cutoffs shared by the kernel evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Lattice sums stop once the remaining weighted terms fall below this.
    pub tail: f64,
    /// Quadratures stop once successive refinements agree to this (relative).
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tail: bessel::DEFAULT_TAIL_EPS,
            quad: 1e-13,
        }
    }
}
