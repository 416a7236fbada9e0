//! Derandomized knockoffs for fixed designs: the knockoff matrix is a
//! deterministic function of the Gram matrix except for the orthonormal
//! complement `U`, so each run redraws `U` and the e-value machinery
//! averages out that choice.

use ndarray::Array1;

use crate::error::Result;
use crate::filter::{derandomize, DerandomizeOptions, DerandomizedOutput};
use crate::knockoffs::FixedXDesign;
use crate::numerics::{Purpose, RngStream};
use crate::stats::ImportanceStatistic;

/// Derandomized fixed-X knockoffs: run `m` builds knockoffs with a fresh
/// complement (stream `(master_seed, m)`), computes the statistic, and the
/// runs aggregate exactly as in [`derandomize`].
pub fn derandomized_fixed_x(
    design: &FixedXDesign,
    y: &Array1<f64>,
    statistic: &dyn ImportanceStatistic,
    options: &DerandomizeOptions,
    master_seed: u64,
) -> Result<DerandomizedOutput> {
    derandomize(design.p(), options, |m| {
        let mut kn = RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Knockoff);
        let xt = design.knockoffs(&mut kn)?;
        let mut st = RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Statistic);
        statistic.compute(design.x(), &xt, y, &mut st)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{ebh, knockoff_evalues, knockoff_filter, knockoff_threshold};
    use crate::stats::MarginalStatistic;
    use ndarray::Array2;

    fn toy_design(seed: u64, n: usize, p: usize) -> (FixedXDesign, Array1<f64>) {
        let mut stream = RngStream::new(seed, 0);
        let x = Array2::from_shape_fn((n, p), |_| stream.std_normal());
        let mut y = Array1::from_shape_fn(n, |_| stream.std_normal() * 0.3);
        for i in 0..n {
            y[i] += 2.0 * x[[i, 0]] - 1.5 * x[[i, 1]];
        }
        (FixedXDesign::new(x).unwrap(), y)
    }

    #[test]
    fn single_run_reduces_to_the_knockoff_filter() {
        let (design, y) = toy_design(51, 80, 12);
        let alpha = 0.4;
        let options = DerandomizeOptions {
            alpha_kn: alpha,
            alpha_ebh: alpha,
            m_runs: 1,
            early_stop: false,
            keep_per_run: false,
        };
        let stat = MarginalStatistic;
        let out = derandomized_fixed_x(&design, &y, &stat, &options, 7).unwrap();
        // Recreate run 1 by hand and apply the plain filter.
        let mut kn = RngStream::for_purpose(7, 1, 0, Purpose::Knockoff);
        let xt = design.knockoffs(&mut kn).unwrap();
        let mut st = RngStream::for_purpose(7, 1, 0, Purpose::Statistic);
        let w = stat.compute(design.x(), &xt, &y, &mut st).unwrap();
        let direct = knockoff_filter(&w, alpha);
        assert_eq!(out.selection.selected, direct.selected);
        // And the aggregated e-values are the single run's e-values.
        let thr = knockoff_threshold(&w, alpha, 1.0, false);
        let e = knockoff_evalues(&w, &thr, design.p()).unwrap();
        assert_eq!(out.evalues, e);
        assert_eq!(out.selection, ebh(&e, alpha));
    }

    #[test]
    fn every_run_satisfies_the_gram_identities() {
        let (design, _) = toy_design(52, 64, 8);
        let sigma = design.gram().as_array().clone();
        for m in 1..=5u64 {
            let mut kn = RngStream::for_purpose(9, m, 0, Purpose::Knockoff);
            let xt = design.knockoffs(&mut kn).unwrap();
            let gram_t = xt.t().dot(&xt);
            let cross = design.x().t().dot(&xt);
            let p = design.p();
            for i in 0..p {
                for j in 0..p {
                    assert!((gram_t[[i, j]] - sigma[[i, j]]).abs() < 1e-8);
                    let want = sigma[[i, j]] - if i == j { design.s()[i] } else { 0.0 };
                    assert!((cross[[i, j]] - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn aggregation_is_reproducible() {
        let (design, y) = toy_design(53, 60, 10);
        let options = DerandomizeOptions::at_level(0.4);
        let stat = MarginalStatistic;
        let a = derandomized_fixed_x(&design, &y, &stat, &options, 99).unwrap();
        let b = derandomized_fixed_x(&design, &y, &stat, &options, 99).unwrap();
        assert_eq!(a.evalues, b.evalues);
        assert_eq!(a.selection, b.selection);
    }
}
