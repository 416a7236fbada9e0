//! Binomial CDF/PMF pair for the pcst multi-environment statistic.

/// Returns `(Ψ, ψ)` where `ψ(x; m, π) = P(B = x)` and `Ψ(x; m, π) = P(B <= x)`
/// for `B ~ Binomial(m, π)`.
///
/// The CDF is the left-to-right sum of the same PMF terms this function
/// produces, so `Ψ(x) == Σ_{i<=x} ψ(i)` holds exactly as computed, not just
/// up to rounding. `x < 0` yields `(0, 0)`; `x > m` yields `(Ψ(m), 0)`.
/// Intended for the small trial counts that arise from environment counts;
/// `π` must lie in `[0, 1]`.
pub fn binom_cdf_pmf(x: i64, m: u64, pi: f64) -> (f64, f64) {
    assert!((0.0..=1.0).contains(&pi), "pi must be in [0, 1]");
    if x < 0 {
        return (0.0, 0.0);
    }
    let x = x as u64;
    let cdf = (0..=x.min(m)).map(|i| pmf(i, m, pi)).sum();
    let p = if x > m { 0.0 } else { pmf(x, m, pi) };
    (cdf, p)
}

fn pmf(i: u64, m: u64, pi: f64) -> f64 {
    debug_assert!(i <= m);
    if pi == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if pi == 1.0 {
        return if i == m { 1.0 } else { 0.0 };
    }
    // C(m, i) pi^i (1-pi)^(m-i), with the binomial coefficient and the pi
    // powers interleaved to keep intermediates in range.
    let mut v = (1.0 - pi).powi((m - i) as i32);
    for k in 1..=i {
        v *= (m - i + k) as f64 / k as f64 * pi;
    }
    v
}
