//! Fixed-X knockoffs: a deterministic function of the design's Gram matrix
//! plus a random orthonormal complement.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::knockoffs::gaussian::equicorrelated_s;
use crate::numerics::{RngStream, SpdMatrix};

/// A fixed design `X` (n x p, full column rank, n >= 2p) with its Gram
/// matrix `Σ = XᵀX` and knockoff loadings `s`.
#[derive(Debug, Clone)]
pub struct FixedXDesign {
    x: Array2<f64>,
    gram: SpdMatrix,
    s: Vec<f64>,
}

impl FixedXDesign {
    /// Builds the design with `s` from the equicorrelated rule applied to
    /// the Gram matrix.
    pub fn new(x: Array2<f64>) -> Result<Self> {
        let gram = Self::checked_gram(&x)?;
        let s = equicorrelated_s(&gram)?;
        Ok(Self { x, gram, s })
    }

    /// Builds the design with caller-supplied loadings.
    pub fn with_s(x: Array2<f64>, s: Vec<f64>) -> Result<Self> {
        let gram = Self::checked_gram(&x)?;
        if s.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                context: format!("s has {} entries for {} columns", s.len(), x.ncols()),
            });
        }
        if s.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::DegenerateCovariance {
                reason: "knockoff loadings must be finite and non-negative".into(),
            });
        }
        Ok(Self { x, gram, s })
    }

    fn checked_gram(x: &Array2<f64>) -> Result<SpdMatrix> {
        let (n, p) = x.dim();
        if n < 2 * p {
            return Err(Error::TooFewRows { n, two_p: 2 * p });
        }
        let g = x.t().dot(x);
        let gram = SpdMatrix::new((&g + &g.t()) * 0.5)?;
        // Full column rank shows up as a successful factorization.
        if let Err(Error::NotPositiveDefinite { index, .. }) = gram.cholesky() {
            return Err(Error::RankDeficientX { column: index });
        }
        Ok(gram)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn gram(&self) -> &SpdMatrix {
        &self.gram
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Constructs one knockoff matrix
    /// `X̃ = X (I - Σ⁻¹ diag{s}) - U C`, where `CᵀC = 2 diag{s} - diag{s}
    /// Σ⁻¹ diag{s}` and `U` is a random orthonormal n x p matrix with
    /// `Uᵀ X = 0`. The construction guarantees `X̃ᵀX̃ = Σ` and
    /// `XᵀX̃ = Σ - diag{s}` exactly in real arithmetic.
    pub fn knockoffs(&self, stream: &mut RngStream) -> Result<Array2<f64>> {
        let (n, p) = self.x.dim();
        let chol = self.gram.cholesky().expect("validated at construction");
        let mut s_diag = Array2::<f64>::zeros((p, p));
        for j in 0..p {
            s_diag[[j, j]] = self.s[j];
        }
        // a = I - Σ⁻¹ diag{s}
        let gram_inv_s = chol.solve_mat(&s_diag);
        let a = Array2::<f64>::eye(p) - &gram_inv_s;
        // m = 2 diag{s} - diag{s} Σ⁻¹ diag{s}; C = Lᵀ from m = L Lᵀ.
        let mut m = -s_diag.dot(&gram_inv_s);
        for j in 0..p {
            m[[j, j]] += 2.0 * self.s[j];
        }
        let m = SpdMatrix::new((&m + &m.t()) * 0.5)?;
        let c = m
            .cholesky()
            .map_err(|_| Error::DegenerateCovariance {
                reason: "2 diag{s} - diag{s} Σ⁻¹ diag{s} is not positive definite".into(),
            })?
            .factor()
            .t()
            .to_owned();
        let qx = orthonormalize(&self.x).map_err(|col| Error::RankDeficientX { column: col })?;
        // Haar-distributed orthonormal basis of a p-dimensional subspace of
        // the orthocomplement of col(X): project a Gaussian matrix, twice
        // for numerical hygiene, then orthonormalize.
        let mut u = None;
        for _attempt in 0..3 {
            let g = Array2::from_shape_vec((n, p), stream.std_normal_vec(n * p))
                .expect("shape matches draw count");
            let g = &g - &qx.dot(&qx.t().dot(&g));
            let g = &g - &qx.dot(&qx.t().dot(&g));
            if let Ok(basis) = orthonormalize(&g) {
                u = Some(basis);
                break;
            }
        }
        let u = u.ok_or(Error::DegenerateCovariance {
            reason: "failed to draw an orthonormal complement basis".into(),
        })?;
        Ok(self.x.dot(&a) - u.dot(&c))
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Fails with the
/// offending column index when a column is numerically dependent.
fn orthonormalize(m: &Array2<f64>) -> std::result::Result<Array2<f64>, usize> {
    let (_, p) = m.dim();
    let mut q = m.to_owned();
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for j in 0..p {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &qk);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm <= 1e-10 * scale {
            return Err(j);
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}
