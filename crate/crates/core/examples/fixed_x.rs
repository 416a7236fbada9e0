//! Fixed-X knockoffs treat the design matrix as given and build the
//! knockoff copy from its Gram matrix alone. The construction leaves the
//! orthogonal complement free, so each derandomized run redraws it.
//!
//! ```text
//! cargo run --example fixed_x
//! ```

use eknock::extensions::derandomized_fixed_x;
use eknock::filter::DerandomizeOptions;
use eknock::knockoffs::FixedXDesign;
use eknock::numerics::RngStream;
use eknock::stats::LcdStatistic;
use ndarray::{Array1, Array2};

fn main() {
    let (n, p) = (240, 30);
    let mut stream = RngStream::new(77, 0);
    let x = Array2::from_shape_vec((n, p), stream.std_normal_vec(n * p)).unwrap();
    let beta: Vec<f64> = (0..p)
        .map(|j| if j < 8 { if j % 2 == 0 { 0.6 } else { -0.6 } } else { 0.0 })
        .collect();
    let y = Array1::from_shape_fn(n, |i| {
        (0..p).map(|j| x[[i, j]] * beta[j]).sum::<f64>() + stream.std_normal()
    });

    let design = FixedXDesign::new(x).unwrap();

    // The defining identities: Xt' Xt = Sigma and X' Xt = Sigma - diag(s),
    // for every draw of the orthogonal complement.
    let sigma = design.gram().as_array();
    let mut worst = 0.0_f64;
    for draw in 0..3 {
        let xt = design.knockoffs(&mut RngStream::new(77, 10 + draw)).unwrap();
        let gram_tt = xt.t().dot(&xt);
        let gram_xt = design.x().t().dot(&xt);
        for a in 0..p {
            for b in 0..p {
                let want_cross = sigma[[a, b]] - if a == b { design.s()[a] } else { 0.0 };
                worst = worst
                    .max((gram_tt[[a, b]] - sigma[[a, b]]).abs())
                    .max((gram_xt[[a, b]] - want_cross).abs());
            }
        }
    }
    println!("max Gram identity violation over 3 draws: {worst:.2e}");

    let statistic = LcdStatistic::gaussian();
    let options = DerandomizeOptions {
        alpha_kn: 0.15,
        alpha_ebh: 0.3,
        m_runs: 15,
        early_stop: true,
        keep_per_run: false,
    };
    let out = derandomized_fixed_x(&design, &y, &statistic, &options, 7).unwrap();
    println!(
        "derandomized fixed-X selection (true signals are 0..8): {:?}",
        out.selection.selected
    );
}
