//! Numerical toolkit for small-ball (anti-concentration) analysis of
//! weighted i.i.d. sums S = sum_k X_k a_k: exact and Monte Carlo
//! concentration functions, the Diophantine lattice-approximation quantity
//! alpha that governs the bounds, the intermediate characteristic-function
//! integrals of the bounding chain, and empirical calibration/verification
//! of the final inequalities.

pub mod bounds;
pub mod cli;
pub mod concentration;
pub mod diophantine;
pub mod distributions;
pub mod error;
pub mod esseen;
pub(crate) mod quad;

pub use error::{Error, Result};

/// Work caps for the exhaustive routines. Exceeding a cap either returns a
/// budget error (exact solvers) or degrades to a flagged heuristic result
/// (branch-and-bound), never a silent wrong answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Max piecewise-quadratic breakpoints enumerated by the 1-D solvers.
    pub breakpoints: u64,
    /// Max branch-and-bound nodes expanded by the certified solver.
    pub bnb_nodes: u64,
    /// Max support points enumerated by exact concentration convolution.
    pub enumeration: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { breakpoints: 10_000_000, bnb_nodes: 1_000_000, enumeration: 10_000_000 }
    }
}

impl Budgets {
    /// Uniform override: every cap set to `cap`.
    pub fn uniform(cap: u64) -> Self {
        Budgets { breakpoints: cap, bnb_nodes: cap, enumeration: cap }
    }
}
