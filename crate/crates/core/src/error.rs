//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by knockoff construction, statistics, filtering, the
/// simulation harness, and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix expected to be symmetric is not (within tolerance).
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asymmetry:.3e}")]
    NonSymmetric { max_asymmetry: f64 },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Covariance is numerically singular or has a degenerate coordinate.
    #[error("degenerate covariance: {reason}")]
    DegenerateCovariance { reason: String },

    /// Conditional distribution has non-positive variance.
    #[error("degenerate conditional at feature {feature}: variance {variance:.3e}")]
    DegenerateConditional { feature: usize, variance: f64 },

    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// Fixed-X knockoffs need at least twice as many rows as columns.
    #[error("too few rows for fixed-X knockoffs: n = {n} < 2p = {two_p}")]
    TooFewRows { n: usize, two_p: usize },

    /// Design matrix does not have full column rank.
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficientX { column: usize },

    /// A computation produced a NaN or infinity.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Knockoff e-values require offset c >= 1 for validity.
    #[error("offset c = {c} is too small: e-values require c >= 1")]
    OffsetTooSmall { c: f64 },

    /// Side-information weights must be strictly positive.
    #[error("non-positive weight u_{index} = {value}")]
    NonPositiveWeight { index: usize, value: f64 },

    /// Adaptive screening rule emitted an invalid or repeated index.
    #[error("invalid screening order: {reason}")]
    InvalidOrdering { reason: String },

    /// Per-environment inputs disagree on the number of features.
    #[error("environment dimension mismatch: {context}")]
    EnvDimensionMismatch { context: String },

    /// Configuration is invalid (bad field values or unknown keys).
    #[error("invalid configuration: {reason}")]
    ConfigInvalid { reason: String },

    /// Input file missing or unreadable.
    #[error("cannot read {path}: {reason}")]
    FileUnreadable { path: String, reason: String },

    /// Requested response column is absent from the CSV header.
    #[error("response column {name:?} not found in header")]
    ResponseMissing { name: String },

    /// Cleaning removed every row or every feature column.
    #[error("dataset is empty after cleaning: {reason}")]
    EmptyAfterCleaning { reason: String },

    /// Wrapped I/O error.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
