//! Deterministic numerical kernels: random streams, dense linear algebra,
//! and exact small-count binomial probabilities.
//!
//! Everything downstream (knockoff sampling, cross-validation, the
//! simulation harness) builds on these primitives, so their contracts are
//! deliberately strict: explicit random streams keyed by `(master_seed,
//! stream_id)`, Cholesky-based factorizations with hard positive-definite
//! checks, and a bisection eigenvalue bound that never relies on an external
//! eigensolver.

mod binomial;
mod linalg;
mod rng;

pub use binomial::binom_cdf_pmf;
pub use linalg::{Cholesky, SpdMatrix};
pub use rng::{stream_id, Purpose, RngStream};

/// Relative tolerance for the symmetry check in [`SpdMatrix::new`].
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Relative reconstruction tolerance guaranteed by [`SpdMatrix::cholesky`]
/// for well-conditioned inputs up to dimension 200.
pub const CHOLESKY_RTOL: f64 = 1e-10;

/// Accuracy of [`SpdMatrix::min_eigenvalue`] (absolute, for matrices of
/// order-one scale).
pub const MIN_EIG_TOL: f64 = 1e-8;
