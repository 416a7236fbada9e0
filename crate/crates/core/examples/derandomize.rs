//! Rerunning the knockoff filter on the same data gives a different answer
//! every time; the derandomized procedure does not. This example fixes one
//! dataset, reruns both methods with fresh randomness, and counts how often
//! each feature's selection flips.
//!
//! ```text
//! cargo run --example derandomize
//! ```

use eknock::filter::{derandomized_knockoffs, knockoff_filter, DerandomizeOptions};
use eknock::harness::{ar1_covariance, generate_dataset, Covariance, ExperimentConfig};
use eknock::knockoffs::GaussianModel;
use eknock::numerics::{Purpose, RngStream, SpdMatrix};
use eknock::stats::{lcd_statistic, Family, LcdStatistic};
use ndarray::Array1;

fn flip_rate(selections: &[Vec<usize>], p: usize) -> f64 {
    // Mean over features of p_hat (1 - p_hat): zero iff every rerun agrees.
    let k = selections.len() as f64;
    (0..p)
        .map(|j| {
            let hits = selections.iter().filter(|s| s.contains(&j)).count() as f64 / k;
            hits * (1.0 - hits)
        })
        .sum::<f64>()
        / p as f64
}

fn main() {
    let cfg = ExperimentConfig {
        n: 300,
        p: 60,
        model_family: Family::Gaussian,
        amplitude: 7.0,
        spacing: 1,
        nonnull_count: 25,
        covariance: Covariance::Ar1(0.4),
        alpha_kn: 0.1,
        alpha_ebh: 0.2,
        offset_c: 1.0,
        m_runs: 10,
        replicates: 1,
        reruns: 1,
        master_seed: 5,
    };
    let mut data_stream = RngStream::for_purpose(cfg.master_seed, 1, 0, Purpose::Dataset);
    let (x, y, truth) = generate_dataset(&cfg, &mut data_stream).unwrap();
    let cov = SpdMatrix::new(ar1_covariance(cfg.p, 0.4)).unwrap();
    let model = GaussianModel::equicorrelated(Array1::zeros(cfg.p), cov).unwrap();
    let statistic = LcdStatistic::gaussian();
    let options = DerandomizeOptions {
        alpha_kn: cfg.alpha_kn,
        alpha_ebh: cfg.alpha_ebh,
        m_runs: cfg.m_runs,
        early_stop: true,
        keep_per_run: false,
    };

    let reruns = 12;
    let mut single = Vec::new();
    let mut derand = Vec::new();
    for k in 1..=reruns {
        let seed = 1000 + k as u64;
        let mut kn = RngStream::for_purpose(seed, 1, 0, Purpose::Knockoff);
        let xt = model.sample_knockoffs(&x, &mut kn).unwrap();
        let mut st = RngStream::for_purpose(seed, 1, 0, Purpose::Statistic);
        let w = lcd_statistic(&x, &xt, &y, Family::Gaussian, &mut st).unwrap();
        single.push(knockoff_filter(&w, cfg.alpha_ebh).selected);

        let out =
            derandomized_knockoffs(&x, &y, &model, &statistic, &options, seed).unwrap();
        derand.push(out.selection.selected);
    }

    println!("one dataset, {reruns} independent reruns of each method");
    println!(
        "original filter:   {} distinct selection sets, flip rate {:.4}",
        distinct(&single),
        flip_rate(&single, cfg.p)
    );
    println!(
        "derandomized (M={}): {} distinct selection sets, flip rate {:.4}",
        cfg.m_runs,
        distinct(&derand),
        flip_rate(&derand, cfg.p)
    );
    let hits = |sels: &[Vec<usize>]| {
        sels.iter()
            .map(|s| s.iter().filter(|&&j| !truth.is_null(j)).count())
            .sum::<usize>() as f64
            / sels.len() as f64
    };
    println!(
        "true discoveries per rerun: original {:.1}, derandomized {:.1} (of {})",
        hits(&single),
        hits(&derand),
        truth.nonnull.len()
    );
}

fn distinct(selections: &[Vec<usize>]) -> usize {
    let mut sets: Vec<&Vec<usize>> = Vec::new();
    for s in selections {
        if !sets.contains(&s) {
            sets.push(s);
        }
    }
    sets.len()
}
