//! The knockoff filter and e-BH applied to knockoff e-values select the
//! same features. This identity is what lets independent runs be averaged:
//! each run's selection is secretly an e-value selection, and e-values can
//! be averaged without losing FDR control.
//!
//! ```text
//! cargo run --example equivalence
//! ```

use eknock::filter::{ebh, knockoff_evalues, knockoff_filter, knockoff_threshold};
use eknock::numerics::RngStream;

fn main() {
    let mut stream = RngStream::new(2024, 0);
    let p = 40;

    for &alpha in &[0.1, 0.2, 0.3] {
        // A mix of strong positives (signals) and symmetric noise.
        let w: Vec<f64> = (0..p)
            .map(|j| {
                if j < 8 {
                    3.0 + stream.std_normal().abs()
                } else {
                    stream.std_normal()
                }
            })
            .collect();

        let direct = knockoff_filter(&w, alpha);

        let thr = knockoff_threshold(&w, alpha, 1.0, false);
        let evalues = knockoff_evalues(&w, &thr, p).unwrap();
        let via_ebh = ebh(&evalues, alpha);

        println!("alpha = {alpha}");
        println!("  filter: {:?}", direct.selected);
        println!("  e-BH:   {:?}", via_ebh.selected);
        assert_eq!(direct.selected, via_ebh.selected);
    }
    println!("identical selections at every level");
}
