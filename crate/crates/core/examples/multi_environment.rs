//! The multi-environment knockoff filter looks for features whose effect
//! replicates across environments. The fully consistent statistic (cst)
//! needs the per-environment statistics to agree in sign everywhere, so a
//! feature active in only two of three environments inherits the third's
//! coin-flip sign (or an outright zero when the lasso drops it). The
//! partially consistent statistic pcst(r) tests agreement in at least r
//! environments and is visibly friendlier to such features.
//!
//! ```text
//! cargo run --example multi_environment
//! ```

use eknock::extensions::{
    derandomized_mekf, multienv_statistic_cst, multienv_statistic_pcst, EnvData, MekfMode,
    MultiEnvStatistics,
};
use eknock::filter::DerandomizeOptions;
use eknock::harness::ar1_covariance;
use eknock::knockoffs::GaussianModel;
use eknock::numerics::{Purpose, RngStream, SpdMatrix};
use eknock::stats::{lcd_statistic, Family, LcdStatistic};
use ndarray::{Array1, Array2};

/// AR(1) features with the given coefficient vector plus unit noise.
fn environment(n: usize, p: usize, beta: &[f64], rho: f64, seed: u64) -> EnvData {
    let mut stream = RngStream::new(seed, 0);
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        x[[i, 0]] = stream.std_normal();
        for j in 1..p {
            x[[i, j]] = rho * x[[i, j - 1]] + (1.0 - rho * rho).sqrt() * stream.std_normal();
        }
    }
    let y = Array1::from_shape_fn(n, |i| {
        (0..p).map(|j| x[[i, j]] * beta[j]).sum::<f64>() + stream.std_normal()
    });
    EnvData { x, y }
}

fn main() {
    let (n, p, rho) = (400, 40, 0.3);
    // Features 0..9 act in all three environments ("everywhere"); features
    // 20..29 act in the first two only ("two of three").
    let everywhere: Vec<usize> = (0..10).collect();
    let two_of_three: Vec<usize> = (20..30).collect();
    let beta = |with_partial: bool| -> Vec<f64> {
        let mut b = vec![0.0; p];
        for (k, &j) in everywhere.iter().enumerate() {
            b[j] = if k % 2 == 0 { 0.5 } else { -0.5 };
        }
        if with_partial {
            for (k, &j) in two_of_three.iter().enumerate() {
                b[j] = if k % 2 == 0 { 0.6 } else { -0.6 };
            }
        }
        b
    };

    let envs = vec![
        environment(n, p, &beta(true), rho, 11),
        environment(n, p, &beta(true), rho, 12),
        environment(n, p, &beta(false), rho, 13),
    ];
    let cov = SpdMatrix::new(ar1_covariance(p, rho)).unwrap();
    let model = GaussianModel::equicorrelated(Array1::zeros(p), cov).unwrap();
    let models = vec![model.clone(), model.clone(), model];

    // How often does each collapsed statistic give a positive sign, by
    // group, over independent knockoff draws? This is the mechanism: cst
    // multiplies in the third environment's coin-flip sign, pcst(2)
    // replaces it with a rank test over the sign counts.
    let draws: usize = 40;
    let mut positive = [[0usize; 3]; 2];
    for d in 1..=draws {
        let mut rows = Array2::<f64>::zeros((3, p));
        for (e, env) in envs.iter().enumerate() {
            let mut kn = RngStream::for_purpose(900, d as u64, e as u64, Purpose::Knockoff);
            let xt = models[e].sample_knockoffs(&env.x, &mut kn).unwrap();
            let mut st = RngStream::for_purpose(900, d as u64, e as u64, Purpose::Statistic);
            let w = lcd_statistic(&env.x, &xt, &env.y, Family::Gaussian, &mut st).unwrap();
            rows.row_mut(e).assign(&Array1::from(w));
        }
        let stats = MultiEnvStatistics::new(rows).unwrap();
        let cst = multienv_statistic_cst(&stats);
        let mut u = RngStream::for_purpose(900, d as u64, 0, Purpose::Pcst);
        let pcst = multienv_statistic_pcst(&stats, 2, &mut u).unwrap();
        for (m, w) in [cst, pcst].iter().enumerate() {
            for j in 0..p {
                let group = if everywhere.contains(&j) {
                    0
                } else if two_of_three.contains(&j) {
                    1
                } else {
                    2
                };
                if w[j] > 0.0 {
                    positive[m][group] += 1;
                }
            }
        }
    }
    println!("fraction of positive collapsed statistics over {draws} knockoff draws:");
    println!(
        "{:<12} {:>11} {:>13} {:>7}",
        "", "everywhere", "two-of-three", "null"
    );
    let sizes = [everywhere.len(), two_of_three.len(), p - 20];
    for (m, label) in ["cst", "pcst(r=2)"].iter().enumerate() {
        let rate = |g: usize| positive[m][g] as f64 / (draws * sizes[g]) as f64;
        println!(
            "{label:<12} {:>11.2} {:>13.2} {:>7.2}",
            rate(0),
            rate(1),
            rate(2)
        );
    }

    let statistic = LcdStatistic::gaussian();
    let options = DerandomizeOptions {
        alpha_kn: 0.2,
        alpha_ebh: 0.4,
        m_runs: 12,
        early_stop: true,
        keep_per_run: false,
    };
    println!(
        "\nderandomized selections (alpha_ebh = {}):",
        options.alpha_ebh
    );
    for (label, mode) in [("cst", MekfMode::Cst), ("pcst(r=2)", MekfMode::Pcst(2))] {
        let out = derandomized_mekf(&envs, &models, &statistic, mode, &options, 31).unwrap();
        let sel = &out.selection.selected;
        let count = |group: &[usize]| sel.iter().filter(|j| group.contains(j)).count();
        println!(
            "{label:<12} {:>2}/10 everywhere, {:>2}/10 two-of-three, {} others",
            count(&everywhere),
            count(&two_of_three),
            sel.len() - count(&everywhere) - count(&two_of_three)
        );
    }
}
