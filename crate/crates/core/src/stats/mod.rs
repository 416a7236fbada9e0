//! Importance statistics for knockoff filtering.
//!
//! The contract that matters here is swap antisymmetry: exchanging feature
//! `j` with its knockoff must negate `w_j` and leave every other entry
//! unchanged. The lasso coefficient-difference statistic earns this by using
//! a full-gradient solver whose iterations are exactly equivariant under
//! column permutation; no coordinate-wise sweeps, no order-dependent
//! shortcuts.

mod lasso;
mod lcd;

pub use lasso::{cv_lasso, fista_lasso, lambda_grid, Family, LassoFit};
pub use lcd::{lcd_statistic, LcdStatistic, MarginalStatistic};

use crate::error::Result;
use crate::numerics::RngStream;
use ndarray::{Array1, Array2};

/// One importance value per feature; positive favors the original feature,
/// negative its knockoff.
pub type ImportanceVector = Vec<f64>;

/// A feature-importance statistic computed from `(X, X̃, y)`.
///
/// Implementations must be swap-antisymmetric: exchanging column `j` of `x`
/// with column `j` of `xt` negates entry `j` of the result (up to solver
/// tolerance) and leaves the rest unchanged. Any internal randomness (such
/// as cross-validation folds) must come from `stream` alone.
pub trait ImportanceStatistic: Sync + Send {
    fn compute(
        &self,
        x: &Array2<f64>,
        xt: &Array2<f64>,
        y: &Array1<f64>,
        stream: &mut RngStream,
    ) -> Result<ImportanceVector>;
}
