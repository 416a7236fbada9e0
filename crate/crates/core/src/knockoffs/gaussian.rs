//! Model-X Gaussian knockoffs.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::knockoffs::{EQUICORRELATED_SLACK, MIN_CORR_EIGENVALUE, SECOND_ORDER_RIDGE};
use crate::numerics::{RngStream, SpdMatrix};

/// Equicorrelated knockoff loadings for a covariance matrix.
///
/// With `corr` the correlation matrix of `cov` and `d_j` its diagonal,
/// returns `s_j = min(1, 2 λ_min(corr)) · d_j · slack`. The slack keeps the
/// conditional knockoff covariance `2 diag{s} - diag{s} Σ⁻¹ diag{s}` strictly
/// positive definite instead of merely semidefinite.
pub fn equicorrelated_s(cov: &SpdMatrix) -> Result<Vec<f64>> {
    let p = cov.dim();
    let a = cov.as_array();
    let diag: Vec<f64> = (0..p).map(|j| a[[j, j]]).collect();
    let max_d = diag.iter().fold(0.0_f64, |acc, v| acc.max(*v));
    if diag.iter().any(|&d| d <= 1e-12 * max_d.max(1e-300)) {
        return Err(Error::DegenerateCovariance {
            reason: "covariance has a (near-)zero diagonal entry".into(),
        });
    }
    let inv_sqrt: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut corr = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            corr[[i, j]] = a[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    // Exact symmetry of the rescaled matrix.
    let corr = (&corr + &corr.t()) * 0.5;
    let lambda_min = SpdMatrix::new(corr)?.min_eigenvalue();
    if lambda_min <= MIN_CORR_EIGENVALUE {
        return Err(Error::DegenerateCovariance {
            reason: format!("correlation matrix min eigenvalue {lambda_min:.3e}"),
        });
    }
    let gamma = (2.0 * lambda_min).min(1.0) * EQUICORRELATED_SLACK;
    Ok(diag.iter().map(|d| gamma * d).collect())
}

/// A Gaussian feature model `X ~ N(mean, cov)` together with knockoff
/// loadings `s`, ready to sample model-X knockoffs.
///
/// Sampling uses the conditional law of the knockoff row given the observed
/// row: mean `μ + (I - diag{s} Σ⁻¹)(x - μ)` and covariance
/// `2 diag{s} - diag{s} Σ⁻¹ diag{s}`. Both are precomputed at construction.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    mean: Array1<f64>,
    cov: SpdMatrix,
    s: Vec<f64>,
    /// `diag{s} Σ⁻¹`, applied to centered rows.
    shrink: Array2<f64>,
    /// Lower Cholesky factor of the conditional covariance.
    cond_chol: Array2<f64>,
}

impl GaussianModel {
    /// Builds a model with caller-supplied loadings `s` (each in `[0, 2 d_j]`
    /// and jointly such that the conditional covariance is positive
    /// definite; the equicorrelated rule always satisfies this).
    pub fn new(mean: Array1<f64>, cov: SpdMatrix, s: Vec<f64>) -> Result<Self> {
        let p = cov.dim();
        if mean.len() != p || s.len() != p {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "mean ({}) and s ({}) must match covariance dimension {p}",
                    mean.len(),
                    s.len()
                ),
            });
        }
        if s.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::DegenerateCovariance {
                reason: "knockoff loadings must be finite and non-negative".into(),
            });
        }
        let chol = cov.cholesky()?;
        // sigma_inv_s = Σ⁻¹ diag{s}; shrink = its transpose diag{s} Σ⁻¹.
        let mut s_diag = Array2::<f64>::zeros((p, p));
        for j in 0..p {
            s_diag[[j, j]] = s[j];
        }
        let sigma_inv_s = chol.solve_mat(&s_diag);
        let shrink = sigma_inv_s.t().to_owned();
        let mut cond = -shrink.dot(&s_diag);
        for j in 0..p {
            cond[[j, j]] += 2.0 * s[j];
        }
        let cond = (&cond + &cond.t()) * 0.5;
        let trace: f64 = (0..p).map(|j| cond[[j, j]]).sum();
        let cond_chol = match SpdMatrix::new(cond.clone())?.cholesky() {
            Ok(c) => c,
            Err(_) => {
                // A hair of jitter absorbs rounding at the PSD boundary.
                let jitter = 1e-12 * (trace / p as f64).max(1e-300);
                let bumped = &cond + jitter * Array2::<f64>::eye(p);
                SpdMatrix::new(bumped)?.cholesky().map_err(|_| {
                    Error::DegenerateCovariance {
                        reason: "conditional knockoff covariance is not positive definite"
                            .into(),
                    }
                })?
            }
        };
        Ok(Self {
            mean,
            cov,
            s,
            shrink,
            cond_chol: cond_chol.factor().clone(),
        })
    }

    /// Builds a model with `s` from the equicorrelated rule.
    pub fn equicorrelated(mean: Array1<f64>, cov: SpdMatrix) -> Result<Self> {
        let s = equicorrelated_s(&cov)?;
        Self::new(mean, cov, s)
    }

    pub fn p(&self) -> usize {
        self.cov.dim()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Samples one knockoff matrix for the rows of `x`. Row `i` of the
    /// result is drawn from the conditional law given row `i` of `x`; the
    /// noise comes entirely from `stream`, row by row, so the output is a
    /// deterministic function of `(x, stream key)`.
    pub fn sample_knockoffs(&self, x: &Array2<f64>, stream: &mut RngStream) -> Result<Array2<f64>> {
        let p = self.p();
        let n = x.nrows();
        if x.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: format!("x has {} columns, model has {p}", x.ncols()),
            });
        }
        let centered = x - &self.mean;
        let mut out = &centered - &centered.dot(&self.shrink.t()) + &self.mean;
        let z = Array2::from_shape_vec((n, p), stream.std_normal_vec(n * p))
            .expect("shape matches draw count");
        out += &z.dot(&self.cond_chol.t());
        Ok(out)
    }
}

/// Fits a Gaussian model to data by its first two sample moments.
///
/// The covariance is the (n-1)-denominator sample covariance plus a ridge
/// loading `SECOND_ORDER_RIDGE · (trace/p) · I`; loadings come from the
/// equicorrelated rule. Columns with zero variance are rejected, as is any
/// sample covariance whose correlation matrix is numerically singular.
pub fn second_order_model(x: &Array2<f64>) -> Result<GaussianModel> {
    let (n, p) = x.dim();
    if n < 2 {
        return Err(Error::DimensionMismatch {
            context: format!("second-order model needs n >= 2 rows, got {n}"),
        });
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = x - &mean;
    let mut cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let trace: f64 = (0..p).map(|j| cov[[j, j]]).sum();
    if (0..p).any(|j| cov[[j, j]] <= 1e-12 * (trace / p as f64).max(1e-300)) {
        return Err(Error::DegenerateCovariance {
            reason: "a column has zero sample variance".into(),
        });
    }
    let ridge = SECOND_ORDER_RIDGE * trace / p as f64;
    for j in 0..p {
        cov[[j, j]] += ridge;
    }
    let cov = (&cov + &cov.t()) * 0.5;
    GaussianModel::equicorrelated(mean, SpdMatrix::new(cov)?)
}
