//! Temporary benchmark scaffolding; not part of the suite.

use std::time::Instant;

use ndarray::Array1;

use eknock::harness::{ar1_covariance, generate_dataset, Covariance, ExperimentConfig};
use eknock::knockoffs::GaussianModel;
use eknock::numerics::{Purpose, RngStream, SpdMatrix};
use eknock::stats::{lcd_statistic, Family};

#[test]
#[ignore]
fn bench_one_lcd() {
    let cfg = ExperimentConfig {
        n: 200,
        p: 50,
        model_family: Family::Gaussian,
        amplitude: 8.0,
        spacing: 4,
        nonnull_count: 10,
        covariance: Covariance::Ar1(0.5),
        alpha_kn: 0.05,
        alpha_ebh: 0.1,
        offset_c: 1.0,
        m_runs: 10,
        replicates: 50,
        reruns: 5,
        master_seed: 71,
    };
    let cov = SpdMatrix::new(ar1_covariance(cfg.p, 0.5)).unwrap();
    let model = GaussianModel::equicorrelated(Array1::zeros(cfg.p), cov).unwrap();
    let mut ds = RngStream::for_purpose(71, 1, 0, Purpose::Dataset);
    let (x, y, _) = generate_dataset(&cfg, &mut ds).unwrap();
    let mut kn = RngStream::for_purpose(71, 1, 0, Purpose::Knockoff);
    let xt = model.sample_knockoffs(&x, &mut kn).unwrap();

    let t0 = Instant::now();
    let mut st = RngStream::for_purpose(71, 1, 0, Purpose::Statistic);
    let w = lcd_statistic(&x, &xt, &y, Family::Gaussian, &mut st).unwrap();
    eprintln!(
        "one LCD: {:.3} s, w[0..4] = {:?}",
        t0.elapsed().as_secs_f64(),
        &w[..4]
    );

    let t1 = Instant::now();
    let reps = 5;
    for m in 2..2 + reps {
        let mut kn = RngStream::for_purpose(71, m, 0, Purpose::Knockoff);
        let xtm = model.sample_knockoffs(&x, &mut kn).unwrap();
        let mut st = RngStream::for_purpose(71, m, 0, Purpose::Statistic);
        let _ = lcd_statistic(&x, &xtm, &y, Family::Gaussian, &mut st).unwrap();
    }
    eprintln!(
        "{} more LCDs: {:.3} s avg",
        reps,
        t1.elapsed().as_secs_f64() / reps as f64
    );
}
