//! Synthetic dataset generation with a known non-null set.

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::harness::config::{Covariance, ExperimentConfig};
use crate::numerics::{Purpose, RngStream};
use crate::stats::Family;

/// Ground truth behind one generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTruth {
    /// Indices with nonzero coefficients, ascending.
    pub nonnull: Vec<usize>,
    pub beta: Vec<f64>,
}

impl ExperimentTruth {
    pub fn is_null(&self, j: usize) -> bool {
        self.beta[j] == 0.0
    }
}

/// The AR(1) covariance matrix `Sigma_jk = rho^|j-k|`.
pub fn ar1_covariance(p: usize, rho: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| rho.powi((i as i32 - j as i32).abs()))
}

/// Coefficient vector: `spacing` zeros, then the first signal, `spacing`
/// zeros, then the second with flipped sign, and so on. Amplitudes are
/// `beta_bar_k / sqrt(n)` with `beta_bar ~ N(amplitude, 1)` drawn from a
/// stream keyed only by the experiment seed, so every dataset draw of the
/// experiment shares the same coefficients.
fn coefficients(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut beta_stream = RngStream::for_purpose(cfg.master_seed, 0, 0, Purpose::Beta);
    let root_n = (cfg.n as f64).sqrt();
    let mut beta = vec![0.0; cfg.p];
    for k in 0..cfg.nonnull_count {
        let bar = cfg.amplitude + beta_stream.std_normal();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        beta[(k + 1) * (cfg.spacing + 1) - 1] = sign * bar / root_n;
    }
    beta
}

/// Draws one dataset: rows of `X` are i.i.d. `N(0, Sigma)` and `Y | X`
/// follows the configured family. The truth records the realized `beta`
/// and its support.
pub fn generate_dataset(
    cfg: &ExperimentConfig,
    stream: &mut RngStream,
) -> Result<(Array2<f64>, Array1<f64>, ExperimentTruth)> {
    cfg.validate()?;
    let beta = coefficients(cfg);
    let (n, p) = (cfg.n, cfg.p);
    let Covariance::Ar1(rho) = cfg.covariance;
    // AR(1) admits the recursion X_0 = Z_0, X_j = rho X_{j-1} +
    // sqrt(1 - rho^2) Z_j, which hits N(0, Sigma) exactly without a
    // factorization.
    let innovation = (1.0 - rho * rho).sqrt();
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z = stream.std_normal();
            let v = if j == 0 { z } else { rho * prev + innovation * z };
            x[[i, j]] = v;
            prev = v;
        }
    }
    let linear = x.dot(&Array1::from_vec(beta.clone()));
    let y = match cfg.model_family {
        Family::Gaussian => &linear + &Array1::from_shape_fn(n, |_| stream.std_normal()),
        Family::Logistic => Array1::from_shape_fn(n, |i| {
            let prob = 1.0 / (1.0 + (-linear[i]).exp());
            if stream.uniform() < prob {
                1.0
            } else {
                0.0
            }
        }),
    };
    let nonnull = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect();
    Ok((x, y, ExperimentTruth { nonnull, beta }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Covariance;

    fn cfg(n: usize, p: usize, z: usize, nonnulls: usize, family: Family) -> ExperimentConfig {
        ExperimentConfig {
            n,
            p,
            model_family: family,
            amplitude: 8.0,
            spacing: z,
            nonnull_count: nonnulls,
            covariance: Covariance::Ar1(0.5),
            alpha_kn: 0.05,
            alpha_ebh: 0.1,
            offset_c: 1.0,
            m_runs: 2,
            replicates: 2,
            reruns: 2,
            master_seed: 7,
        }
    }

    #[test]
    fn beta_layout_alternates_at_the_stated_spacing() {
        let c = cfg(100, 40, 4, 8, Family::Gaussian);
        let mut stream = RngStream::for_purpose(c.master_seed, 1, 0, Purpose::Dataset);
        let (_, _, truth) = generate_dataset(&c, &mut stream).unwrap();
        let expect: Vec<usize> = (1..=8).map(|k| k * 5 - 1).collect();
        assert_eq!(truth.nonnull, expect);
        for (k, &j) in expect.iter().enumerate() {
            let b = truth.beta[j];
            assert!(b != 0.0);
            assert_eq!(b > 0.0, k % 2 == 0, "entry {k} has wrong sign: {b}");
            // Amplitude 8 and unit noise keep every |beta_bar| positive in
            // practice; magnitudes scale as 1/sqrt(n).
            assert!(b.abs() < 20.0 / (c.n as f64).sqrt());
        }
        for (j, &b) in truth.beta.iter().enumerate() {
            assert_eq!(b != 0.0, expect.contains(&j));
        }
    }

    #[test]
    fn full_scale_linear_shape() {
        // The full-size linear design: 80 signals at spacing 9 exactly fill
        // p = 800.
        let c = cfg(1000, 800, 9, 80, Family::Gaussian);
        let mut stream = RngStream::for_purpose(c.master_seed, 1, 0, Purpose::Dataset);
        let (x, y, truth) = generate_dataset(&c, &mut stream).unwrap();
        assert_eq!(x.dim(), (1000, 800));
        assert_eq!(y.len(), 1000);
        assert_eq!(truth.nonnull.len(), 80);
        assert_eq!(*truth.nonnull.last().unwrap(), 799);
    }

    #[test]
    fn fixed_seed_is_bit_identical_and_beta_is_frozen_across_draws() {
        let c = cfg(50, 20, 3, 5, Family::Gaussian);
        let draw = |run: u64| {
            let mut s = RngStream::for_purpose(c.master_seed, run, 0, Purpose::Dataset);
            generate_dataset(&c, &mut s).unwrap()
        };
        let (x1, y1, t1) = draw(1);
        let (x2, y2, t2) = draw(1);
        assert_eq!(x1, x2);
        assert_eq!(y1, y2);
        assert_eq!(t1, t2);
        // A different dataset draw changes the data but not the truth.
        let (x3, _, t3) = draw(2);
        assert_ne!(x1, x3);
        assert_eq!(t1, t3);
    }

    #[test]
    fn feature_covariance_approaches_ar1() {
        let c = cfg(20_000, 4, 1, 2, Family::Gaussian);
        let mut stream = RngStream::for_purpose(3, 1, 0, Purpose::Dataset);
        let (x, _, _) = generate_dataset(&c, &mut stream).unwrap();
        let n = x.nrows() as f64;
        let sigma = ar1_covariance(4, 0.5);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for r in 0..x.nrows() {
                    acc += x[[r, i]] * x[[r, j]];
                }
                let got = acc / n;
                // 4-sigma Monte Carlo band for a product-moment estimate.
                let band = 4.0 * (1.0 + sigma[[i, j]] * sigma[[i, j]]).sqrt() / n.sqrt();
                assert!(
                    (got - sigma[[i, j]]).abs() < band,
                    "cov[{i}][{j}] = {got}, want {}",
                    sigma[[i, j]]
                );
            }
        }
    }

    #[test]
    fn logistic_responses_are_binary_and_track_the_signal() {
        let mut c = cfg(4000, 12, 1, 6, Family::Logistic);
        c.amplitude = 40.0;
        let mut stream = RngStream::for_purpose(c.master_seed, 1, 0, Purpose::Dataset);
        let (x, y, truth) = generate_dataset(&c, &mut stream).unwrap();
        assert!(y.iter().all(|&v| v == 0.0 || v == 1.0));
        // Rows with a large positive linear predictor should be mostly 1:
        // sigmoid(1) is already 0.73 and the conditional mean predictor
        // given the cut sits well above 1.
        let linear = x.dot(&Array1::from_vec(truth.beta.clone()));
        let (mut hi, mut hi_ones) = (0.0, 0.0);
        for i in 0..c.n {
            if linear[i] > 1.0 {
                hi += 1.0;
                hi_ones += y[i];
            }
        }
        assert!(hi > 100.0, "degenerate split: {hi} rows");
        assert!(hi_ones / hi > 0.7, "fraction {}", hi_ones / hi);
    }
}
