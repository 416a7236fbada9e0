//! Moment-based exchangeability diagnostics for knockoff matrices.

use ndarray::{Array2, ArrayView1};

/// Empirical discrepancies between the joint moments of `(X, X̃)` and the
/// same moments with feature `j` swapped with its knockoff. For valid
/// knockoffs every gap is a mean-zero Monte Carlo fluctuation of scale
/// roughly `mc_scale`; systematic violations (for instance a knockoff built
/// by permuting rows) show up as gaps many multiples of `mc_scale`.
///
/// The report is advisory: it cannot prove exchangeability, only expose
/// clear failures.
#[derive(Debug, Clone)]
pub struct ExchangeabilityReport {
    pub feature: usize,
    /// |mean(X_j) - mean(X̃_j)|
    pub mean_gap: f64,
    /// |var(X_j) - var(X̃_j)|
    pub var_gap: f64,
    /// max over k != j of |cov(X_j, X_k) - cov(X̃_j, X_k)|
    pub max_cross_cov_gap: f64,
    /// max over k != j of |cov(X_j, X̃_k) - cov(X̃_j, X̃_k)|
    pub max_knock_cov_gap: f64,
    /// Rough standard error of the covariance gaps.
    pub mc_scale: f64,
}

impl ExchangeabilityReport {
    /// True when some gap exceeds `band` Monte Carlo standard errors.
    pub fn flagged(&self, band: f64) -> bool {
        let lim = band * self.mc_scale;
        self.mean_gap > lim
            || self.var_gap > lim
            || self.max_cross_cov_gap > lim
            || self.max_knock_cov_gap > lim
    }
}

fn mean(v: ArrayView1<f64>) -> f64 {
    v.sum() / v.len() as f64
}

fn cov(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n
}

/// Compares first and second joint moments of `(X, X̃)` before and after
/// swapping feature `j` with its knockoff.
pub fn exchangeability_diagnostic(
    x: &Array2<f64>,
    xt: &Array2<f64>,
    j: usize,
) -> ExchangeabilityReport {
    assert_eq!(x.dim(), xt.dim(), "x and xt must have identical shape");
    let (n, p) = x.dim();
    assert!(j < p, "feature index out of range");
    let xj = x.column(j);
    let tj = xt.column(j);
    let mean_gap = (mean(xj) - mean(tj)).abs();
    let var_gap = (cov(xj, xj) - cov(tj, tj)).abs();
    let mut max_cross = 0.0_f64;
    let mut max_knock = 0.0_f64;
    for k in 0..p {
        if k == j {
            continue;
        }
        max_cross = max_cross.max((cov(xj, x.column(k)) - cov(tj, x.column(k))).abs());
        max_knock = max_knock.max((cov(xj, xt.column(k)) - cov(tj, xt.column(k))).abs());
    }
    // Variance of a sample covariance of (roughly) unit-variance entries is
    // O(1/n); scale by the largest variance seen among the involved columns.
    let vmax = (0..p)
        .flat_map(|k| [cov(x.column(k), x.column(k)), cov(xt.column(k), xt.column(k))])
        .fold(0.0_f64, f64::max);
    let mc_scale = std::f64::consts::SQRT_2 * vmax.max(1e-300) / (n as f64).sqrt();
    ExchangeabilityReport {
        feature: j,
        mean_gap,
        var_gap,
        max_cross_cov_gap: max_cross,
        max_knock_cov_gap: max_knock,
        mc_scale,
    }
}
