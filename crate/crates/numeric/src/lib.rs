//! Numerical engines shared by the game workbench.
//!
//! Two pieces live here:
//!
//! * [`HermitianMatrix`] and its eigen helpers, including the real embedding
//!   that turns an `n x n` complex Hermitian matrix into a `2n x 2n` real
//!   symmetric one.
//! * A small dense primal-dual interior-point solver for block-diagonal
//!   semidefinite programs ([`sdp`]).
//!
//! Everything is single threaded and deterministic; independent problems may
//! be solved concurrently.

pub mod error;
pub mod hermitian;
pub mod sdp;

pub use error::NumericError;
pub use hermitian::{embed_hermitian, extract_hermitian, HermitianMatrix};
pub use num_complex::Complex64;
pub use sdp::{
    residuals, solve_sdp, BlockMatrix, ResidualReport, SdpProblem, SdpSolution, SdpStatus, Sense,
    SolverOptions, SparseSymMatrix,
};
