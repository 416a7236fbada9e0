//! Knockoff construction.
//!
//! Model-X Gaussian knockoffs are sampled feature-row by feature-row from the
//! exact conditional law of the knockoff copy given the observed row; fixed-X
//! knockoffs are built deterministically from the design's Gram matrix plus a
//! random orthonormal complement. Both share the equicorrelated `s` rule,
//! which trades a small, uniform amount of correlation between each feature
//! and its knockoff for validity of the joint construction.

mod diagnostics;
mod fixed_x;
mod gaussian;

pub use diagnostics::{exchangeability_diagnostic, ExchangeabilityReport};
pub use fixed_x::FixedXDesign;
pub use gaussian::{equicorrelated_s, second_order_model, GaussianModel};

/// Multiplicative slack applied to the equicorrelated `s` vector so the
/// conditional knockoff covariance stays strictly positive definite.
pub const EQUICORRELATED_SLACK: f64 = 0.999;

/// Ridge loading added to the sample covariance in [`second_order_model`],
/// as a fraction of the average diagonal entry.
pub const SECOND_ORDER_RIDGE: f64 = 1e-6;

/// Smallest admissible eigenvalue of the correlation matrix before the
/// equicorrelated rule reports a degenerate covariance.
pub const MIN_CORR_EIGENVALUE: f64 = 1e-8;
