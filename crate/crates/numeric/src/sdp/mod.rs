//! Block-diagonal semidefinite programs in standard form.
//!
//! ```text
//!   minimize / maximize   <C, X>
//!   subject to            <A_i, X> = b_i,   i = 1..m
//!                         X = diag(X_1, ..., X_k) >= 0
//! ```
//!
//! For a minimization the dual is `max b'y` s.t. `C - sum y_i A_i = S >= 0`;
//! for a maximization it is `min b'y` s.t. `sum y_i A_i - C = S >= 0`, so
//! `dual_obj` is an upper bound on the primal optimum.

mod problem;
mod residuals;
pub mod sdpa;
mod solver;

pub use problem::{BlockMatrix, Constraint, SdpProblem, Sense, SparseSymMatrix, SymEntry};
pub use residuals::{residuals, ResidualReport};
pub use solver::{solve_sdp, SdpSolution, SdpStatus, SolverOptions};
