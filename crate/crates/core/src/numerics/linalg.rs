//! Symmetric positive-definite matrices, Cholesky factorization, and a
//! bisection bound for the smallest eigenvalue.
//!
//! The Cholesky factorization doubles as the positive-definiteness test:
//! a matrix is accepted as SPD exactly when every pivot is strictly
//! positive. `min_eigenvalue` reuses that test, bisecting on `t` such that
//! `A - t I` stays factorizable, so no external eigensolver is needed.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::numerics::SYMMETRY_RTOL;

/// A square symmetric matrix intended to be positive definite.
///
/// Construction checks shape, finiteness, and symmetry (relative tolerance
/// [`SYMMETRY_RTOL`]). Positive definiteness itself is established lazily:
/// [`SpdMatrix::cholesky`] fails with [`Error::NotPositiveDefinite`] when a
/// pivot is non-positive.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    m: Array2<f64>,
}

impl SpdMatrix {
    pub fn new(m: Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                context: format!("SpdMatrix must be square, got {r}x{c}"),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "SpdMatrix entries".into(),
            });
        }
        let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let mut max_asym = 0.0_f64;
        for i in 0..r {
            for j in (i + 1)..r {
                max_asym = max_asym.max((m[[i, j]] - m[[j, i]]).abs());
            }
        }
        if max_asym > SYMMETRY_RTOL * scale.max(1.0) {
            return Err(Error::NonSymmetric {
                max_asymmetry: max_asym,
            });
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn into_array(self) -> Array2<f64> {
        self.m
    }

    /// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let p = self.dim();
        let mut a = flatten(&self.m);
        cholesky_in_place(&mut a, p).map_err(|(index, pivot)| Error::NotPositiveDefinite {
            index,
            pivot,
        })?;
        // Zero the strict upper triangle so the factor is exactly triangular.
        for i in 0..p {
            for j in (i + 1)..p {
                a[i * p + j] = 0.0;
            }
        }
        let l = Array2::from_shape_vec((p, p), a).expect("shape preserved");
        Ok(Cholesky { l })
    }

    /// Smallest eigenvalue, located by bisection on the shift `t` for which
    /// `A - t I` remains positive definite. Gershgorin discs bracket the
    /// search; accuracy is better than `1e-8` for matrices of order-one
    /// scale. Works for indefinite symmetric inputs too (the result is then
    /// negative).
    pub fn min_eigenvalue(&self) -> f64 {
        let p = self.dim();
        if p == 0 {
            return 0.0;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..p {
            let radius: f64 = (0..p)
                .filter(|&j| j != i)
                .map(|j| self.m[[i, j]].abs())
                .sum();
            lo = lo.min(self.m[[i, i]] - radius);
            hi = hi.max(self.m[[i, i]] + radius);
        }
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let pad = 1e-3 * scale;
        let mut a = lo - pad; // feasible: A - aI is PD
        let mut b = hi + pad; // infeasible
        let base = flatten(&self.m);
        let mut scratch = vec![0.0_f64; p * p];
        let tol = 1e-12 * scale;
        for _ in 0..200 {
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            scratch.copy_from_slice(&base);
            for i in 0..p {
                scratch[i * p + i] -= mid;
            }
            if cholesky_in_place(&mut scratch, p).is_ok() {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub fn factor(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `A x = b` via the two triangular systems.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let p = self.dim();
        assert_eq!(b.len(), p, "solve_vec dimension mismatch");
        let mut x = b.to_vec();
        // L y = b
        for i in 0..p {
            let mut v = x[i];
            for k in 0..i {
                v -= self.l[[i, k]] * x[k];
            }
            x[i] = v / self.l[[i, i]];
        }
        // Lᵀ x = y
        for i in (0..p).rev() {
            let mut v = x[i];
            for k in (i + 1)..p {
                v -= self.l[[k, i]] * x[k];
            }
            x[i] = v / self.l[[i, i]];
        }
        Array1::from_vec(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Array2<f64>) -> Array2<f64> {
        let p = self.dim();
        assert_eq!(b.nrows(), p, "solve_mat dimension mismatch");
        let mut out = Array2::<f64>::zeros(b.dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            let x = self.solve_vec(&col.to_owned());
            out.column_mut(j).assign(&x);
        }
        out
    }

    /// `A⁻¹` via solves against the identity.
    pub fn inverse(&self) -> Array2<f64> {
        let p = self.dim();
        self.solve_mat(&Array2::eye(p))
    }

    /// `L Lᵀ` (used by tests to verify reconstruction accuracy).
    pub fn reconstruct(&self) -> Array2<f64> {
        self.l.dot(&self.l.t())
    }
}

fn flatten(m: &Array2<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

/// Overwrites the lower triangle of the row-major buffer `a` with the
/// Cholesky factor. Fails with `(index, pivot)` at the first non-positive
/// pivot; the comparison is written so NaN pivots also fail.
fn cholesky_in_place(a: &mut [f64], p: usize) -> std::result::Result<(), (usize, f64)> {
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > 0.0) {
            return Err((j, d));
        }
        let ljj = d.sqrt();
        a[j * p + j] = ljj;
        for i in (j + 1)..p {
            let mut v = a[i * p + j];
            for k in 0..j {
                v -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = v / ljj;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, CHOLESKY_RTOL, MIN_EIG_TOL};
    use ndarray::array;

    fn random_spd(p: usize, seed: u64) -> SpdMatrix {
        let mut s = RngStream::new(seed, 0);
        let b = Array2::from_shape_vec((p, p), s.std_normal_vec(p * p)).unwrap();
        let a = b.t().dot(&b) / p as f64 + 0.5 * Array2::<f64>::eye(p);
        SpdMatrix::new(a).unwrap()
    }

    /// Brute-force smallest eigenvalue for dim <= 3 via characteristic
    /// polynomial roots (closed forms), independent of the bisection code.
    fn char_poly_min_eig(m: &Array2<f64>) -> f64 {
        match m.nrows() {
            1 => m[[0, 0]],
            2 => {
                let (a, b, c) = (m[[0, 0]], m[[0, 1]], m[[1, 1]]);
                let mean = 0.5 * (a + c);
                let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                mean - disc
            }
            3 => {
                // Symmetric 3x3: trigonometric solution of the cubic.
                let q = m.diag().sum() / 3.0;
                let shifted = m - q * Array2::<f64>::eye(3);
                let p2: f64 = shifted.iter().map(|v| v * v).sum::<f64>() / 6.0;
                if p2 <= 0.0 {
                    return q;
                }
                let p = p2.sqrt();
                let det = {
                    let b = &shifted / p;
                    b[[0, 0]] * (b[[1, 1]] * b[[2, 2]] - b[[1, 2]] * b[[2, 1]])
                        - b[[0, 1]] * (b[[1, 0]] * b[[2, 2]] - b[[1, 2]] * b[[2, 0]])
                        + b[[0, 2]] * (b[[1, 0]] * b[[2, 1]] - b[[1, 1]] * b[[2, 0]])
                };
                let r = (det / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                // Smallest root of the three.
                q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
            }
            _ => panic!("oracle only for dim <= 3"),
        }
    }

    #[test]
    fn cholesky_worked_example() {
        let a = SpdMatrix::new(array![[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = a.cholesky().unwrap();
        assert_eq!(l.factor()[[0, 0]], 2.0);
        assert_eq!(l.factor()[[1, 0]], 1.0);
        assert_eq!(l.factor()[[0, 1]], 0.0);
        assert!((l.factor()[[1, 1]] - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SpdMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        match a.cholesky() {
            Err(Error::NotPositiveDefinite { index, pivot }) => {
                assert_eq!(index, 1);
                assert!(pivot <= 0.0);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn spd_rejects_asymmetry_and_non_square() {
        assert!(matches!(
            SpdMatrix::new(array![[1.0, 0.5], [0.4, 1.0]]),
            Err(Error::NonSymmetric { .. })
        ));
        assert!(matches!(
            SpdMatrix::new(Array2::zeros((2, 3))),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            SpdMatrix::new(array![[f64::NAN]]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn cholesky_reconstructs_up_to_dim_200() {
        for &(p, seed) in &[(5usize, 1u64), (50, 2), (200, 3)] {
            let a = random_spd(p, seed);
            let rec = a.cholesky().unwrap().reconstruct();
            let scale = a
                .as_array()
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let err = (&rec - a.as_array())
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()));
            assert!(
                err <= CHOLESKY_RTOL * scale,
                "dim {p}: reconstruction error {err:.3e} vs scale {scale:.3e}"
            );
        }
    }

    #[test]
    fn solve_inverts_the_system() {
        let a = random_spd(40, 7);
        let mut s = RngStream::new(7, 1);
        let b = Array1::from_vec(s.std_normal_vec(40));
        let x = a.cholesky().unwrap().solve_vec(&b);
        let resid = &a.as_array().dot(&x) - &b;
        let err = resid.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        assert!(err < 1e-9, "residual {err:.3e}");
    }

    #[test]
    fn min_eigenvalue_worked_examples() {
        // AR(1) with rho = 0.5 in two dimensions: eigenvalues 1 +- rho.
        let a = SpdMatrix::new(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        assert!((a.min_eigenvalue() - 0.5).abs() < MIN_EIG_TOL);
        let id = SpdMatrix::new(Array2::<f64>::eye(4)).unwrap();
        assert!((id.min_eigenvalue() - 1.0).abs() < MIN_EIG_TOL);
        // Indefinite symmetric input: smallest eigenvalue is negative.
        let ind = SpdMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!((ind.min_eigenvalue() + 1.0).abs() < MIN_EIG_TOL);
    }

    #[test]
    fn min_eigenvalue_matches_char_poly_roots() {
        let mut s = RngStream::new(99, 0);
        for trial in 0..200 {
            let dim = 1 + trial % 3;
            let b = Array2::from_shape_vec((dim, dim), s.std_normal_vec(dim * dim)).unwrap();
            let sym = (&b + &b.t()) * 0.5;
            let m = SpdMatrix::new(sym.clone()).unwrap();
            let got = m.min_eigenvalue();
            let want = char_poly_min_eig(&sym);
            assert!(
                (got - want).abs() <= MIN_EIG_TOL,
                "dim {dim} trial {trial}: bisection {got} vs oracle {want}"
            );
        }
    }
}
