//! Side information in the derandomized pipeline, two ways: explicit
//! positive weights folded into the e-values, or an adaptive screening
//! order that consults the side information and the masked statistics.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::filter::{derandomize_evalues, DerandomizeOptions, DerandomizedOutput, EValueVector,
    ThresholdResult};
use crate::filter::knockoff_threshold;
use crate::knockoffs::GaussianModel;
use crate::numerics::{Purpose, RngStream};
use crate::stats::ImportanceStatistic;

/// How the side information is meant to be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideInfoKind {
    /// Positive per-feature weights, consumed directly by
    /// [`weighted_evalues`].
    Weights,
    /// Free-form per-feature scores, consumed only through an
    /// [`OrderingRule`].
    Covariates,
}

/// Per-feature side information.
#[derive(Debug, Clone)]
pub struct SideInfo {
    pub values: Vec<f64>,
    pub kind: SideInfoKind,
}

impl SideInfo {
    /// Positive weights; validated here so downstream code can assume them.
    pub fn weights(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(Self {
            values,
            kind: SideInfoKind::Weights,
        })
    }

    /// Unconstrained scores for adaptive screening.
    pub fn covariates(values: Vec<f64>) -> Self {
        Self {
            values,
            kind: SideInfoKind::Covariates,
        }
    }
}

/// Weighted knockoff e-values:
/// `e_j = p * u_j * 1{w_j >= T} / (u_j + sum_k u_k * 1{w_k <= -T})`.
///
/// Uniform weights reduce to [`crate::filter::knockoff_evalues`] exactly
/// (same floats, not just the same sets), and rescaling all weights by a
/// power of two leaves the e-values bit-identical. Requires a threshold
/// with offset at least 1, as in the unweighted case.
pub fn weighted_evalues(
    w: &[f64],
    thr: &ThresholdResult,
    side: &SideInfo,
    p_dim: usize,
) -> Result<EValueVector> {
    if thr.offset_c < 1.0 {
        return Err(Error::OffsetTooSmall { c: thr.offset_c });
    }
    if side.kind != SideInfoKind::Weights {
        return Err(Error::ConfigInvalid {
            reason: "weighted e-values need side information of kind weights".into(),
        });
    }
    let u = &side.values;
    if u.len() != p_dim || w.len() != p_dim {
        return Err(Error::DimensionMismatch {
            context: format!(
                "p = {p_dim} with {} statistics and {} weights",
                w.len(),
                u.len()
            ),
        });
    }
    for (index, &value) in u.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    if !thr.threshold.is_finite() {
        return Ok(EValueVector(vec![0.0; p_dim]));
    }
    let t = thr.threshold;
    let neg_weight: f64 = (0..p_dim).filter(|&k| w[k] <= -t).map(|k| u[k]).sum();
    let p = p_dim as f64;
    Ok(EValueVector(
        (0..p_dim)
            .map(|j| {
                if w[j] >= t {
                    p * u[j] / (u[j] + neg_weight)
                } else {
                    0.0
                }
            })
            .collect(),
    ))
}

/// A screening order for adaptive knockoffs.
///
/// The rule sees the side information and the masked statistics (magnitudes
/// only) and returns the order in which features are screened, most-likely
/// null first. It must return a permutation of `0..p`; anything else is
/// rejected. By construction the rule cannot peek at the signs of
/// unscreened statistics; that restriction is what makes the stopping time
/// below legitimate, so richer rules must preserve it.
pub trait OrderingRule: Sync {
    fn screening_order(&self, side: &SideInfo, magnitudes: &[f64]) -> Vec<usize>;
}

/// Default rule: screen in ascending side-info score (lowest priority of
/// being a signal first), breaking ties by descending magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultOrdering;

impl OrderingRule for DefaultOrdering {
    fn screening_order(&self, side: &SideInfo, magnitudes: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..magnitudes.len()).collect();
        order.sort_by(|&a, &b| {
            side.values[a]
                .partial_cmp(&side.values[b])
                .expect("finite side information")
                .then(
                    magnitudes[b]
                        .partial_cmp(&magnitudes[a])
                        .expect("finite statistics"),
                )
        });
        order
    }
}

/// Adaptive knockoff e-values.
///
/// Features are screened one at a time in the rule's order. With `P(k)` and
/// `N(k)` the unscreened features with positive and negative statistics
/// after `k` screening steps, the procedure stops at
///
/// `T = inf{k : (1 + |N(k)|) / (|P(k)| v 1) <= alpha_kn}`
///
/// (falling back to `T = p`, where every e-value is zero, when no step
/// qualifies) and sets `e_j = p * 1{j in P(T)} / (1 + |N(T)|)`.
pub fn adaptive_knockoff_evalues(
    w: &[f64],
    side: &SideInfo,
    rule: &dyn OrderingRule,
    alpha_kn: f64,
    p_dim: usize,
) -> Result<EValueVector> {
    if w.len() != p_dim || side.values.len() != p_dim {
        return Err(Error::DimensionMismatch {
            context: format!(
                "p = {p_dim} with {} statistics and {} side-info entries",
                w.len(),
                side.values.len()
            ),
        });
    }
    if !(alpha_kn > 0.0 && alpha_kn <= 1.0) {
        return Err(Error::ConfigInvalid {
            reason: "alpha_kn must lie in (0, 1]".into(),
        });
    }
    let magnitudes: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    let order = rule.screening_order(side, &magnitudes);
    if order.len() != p_dim {
        return Err(Error::InvalidOrdering {
            reason: format!("rule returned {} indices for p = {p_dim}", order.len()),
        });
    }
    let mut seen = vec![false; p_dim];
    for &j in &order {
        if j >= p_dim || seen[j] {
            return Err(Error::InvalidOrdering {
                reason: format!("rule screened index {j} twice or out of range"),
            });
        }
        seen[j] = true;
    }

    let mut unscreened = vec![true; p_dim];
    let mut num_pos = w.iter().filter(|&&v| v > 0.0).count();
    let mut num_neg = w.iter().filter(|&&v| v < 0.0).count();
    let mut stop_k: Option<usize> = None;
    for k in 0..=p_dim {
        if (1.0 + num_neg as f64) <= alpha_kn * (num_pos.max(1) as f64) {
            stop_k = Some(k);
            break;
        }
        if k == p_dim {
            break;
        }
        let j = order[k];
        unscreened[j] = false;
        if w[j] > 0.0 {
            num_pos -= 1;
        } else if w[j] < 0.0 {
            num_neg -= 1;
        }
    }
    let p = p_dim as f64;
    match stop_k {
        None => Ok(EValueVector(vec![0.0; p_dim])),
        Some(_) => {
            let denom = 1.0 + num_neg as f64;
            Ok(EValueVector(
                (0..p_dim)
                    .map(|j| {
                        if unscreened[j] && w[j] > 0.0 {
                            p / denom
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ))
        }
    }
}

/// Derandomized knockoffs with weighted e-values: per run, threshold with
/// offset 1 (early stop per options), weighted e-values, then the usual
/// fixed-order average and e-BH.
pub fn derandomized_weighted(
    x: &Array2<f64>,
    y: &Array1<f64>,
    model: &GaussianModel,
    statistic: &dyn ImportanceStatistic,
    side: &SideInfo,
    options: &DerandomizeOptions,
    master_seed: u64,
) -> Result<DerandomizedOutput> {
    let p = model.p();
    derandomize_evalues(p, options, |m| {
        let w = run_statistic(x, y, model, statistic, master_seed, m)?;
        let thr = knockoff_threshold(&w, options.alpha_kn, 1.0, options.early_stop);
        weighted_evalues(&w, &thr, side, p)
    })
}

/// Derandomized adaptive knockoffs: per run, adaptive screening at
/// `alpha_kn` in the rule's order, then average and e-BH.
pub fn derandomized_adaptive(
    x: &Array2<f64>,
    y: &Array1<f64>,
    model: &GaussianModel,
    statistic: &dyn ImportanceStatistic,
    side: &SideInfo,
    rule: &dyn OrderingRule,
    options: &DerandomizeOptions,
    master_seed: u64,
) -> Result<DerandomizedOutput> {
    let p = model.p();
    derandomize_evalues(p, options, |m| {
        let w = run_statistic(x, y, model, statistic, master_seed, m)?;
        adaptive_knockoff_evalues(&w, side, rule, options.alpha_kn, p)
    })
}

fn run_statistic(
    x: &Array2<f64>,
    y: &Array1<f64>,
    model: &GaussianModel,
    statistic: &dyn ImportanceStatistic,
    master_seed: u64,
    m: usize,
) -> Result<Vec<f64>> {
    let mut kn = RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Knockoff);
    let xt = model.sample_knockoffs(x, &mut kn)?;
    let mut st = RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Statistic);
    statistic.compute(x, &xt, y, &mut st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{knockoff_evalues, knockoff_threshold};

    #[test]
    fn weighted_worked_example() {
        // At level 1 the scan rejects t = 1 (estimate 2) and lands on
        // t = 3, where the only survivor holds weight 2 of the total 3.
        let w = [3.0, -1.0];
        let thr = knockoff_threshold(&w, 1.0, 1.0, false);
        assert_eq!(thr.threshold, 3.0);
        let side = SideInfo::weights(vec![2.0, 1.0]).unwrap();
        let e = weighted_evalues(&w, &thr, &side, 2).unwrap();
        assert_eq!(e.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn uniform_weights_match_unweighted_bitwise() {
        let w = [3.0, -1.0, 2.0, -2.0, 0.5, 0.0, 4.2, -0.3];
        for alpha in [0.3, 0.6, 1.0] {
            let thr = knockoff_threshold(&w, alpha, 1.0, false);
            let side = SideInfo::weights(vec![1.0; w.len()]).unwrap();
            let weighted = weighted_evalues(&w, &thr, &side, w.len()).unwrap();
            let plain = knockoff_evalues(&w, &thr, w.len()).unwrap();
            assert_eq!(weighted, plain);
        }
    }

    #[test]
    fn doubling_weights_changes_nothing() {
        let w = [1.5, -0.7, 0.9, -0.9, 2.3];
        let thr = knockoff_threshold(&w, 1.0, 1.0, false);
        let u: Vec<f64> = vec![0.3, 1.1, 2.5, 0.8, 0.4];
        let side = SideInfo::weights(u.clone()).unwrap();
        let doubled = SideInfo::weights(u.iter().map(|v| v * 2.0).collect()).unwrap();
        let a = weighted_evalues(&w, &thr, &side, 5).unwrap();
        let b = weighted_evalues(&w, &thr, &doubled, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weighted_rejects_bad_inputs() {
        let w = [1.0, -1.0];
        let thr = knockoff_threshold(&w, 1.0, 1.0, false);
        assert!(SideInfo::weights(vec![1.0, 0.0]).is_err());
        assert!(SideInfo::weights(vec![1.0, -2.0]).is_err());
        let covariates = SideInfo::covariates(vec![0.3, 0.7]);
        assert!(weighted_evalues(&w, &thr, &covariates, 2).is_err());
        let small_c = knockoff_threshold(&w, 1.0, 0.0, false);
        let side = SideInfo::weights(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            weighted_evalues(&w, &small_c, &side, 2),
            Err(Error::OffsetTooSmall { .. })
        ));
    }

    /// Screens in the fixed order given at construction.
    struct FixedOrder(Vec<usize>);

    impl OrderingRule for FixedOrder {
        fn screening_order(&self, _side: &SideInfo, _magnitudes: &[f64]) -> Vec<usize> {
            self.0.clone()
        }
    }

    #[test]
    fn adaptive_stops_at_step_zero_when_feasible() {
        // Two negatives, six positives: (1 + 2) / 6 = 0.5, so at
        // alpha_kn = 0.5 the procedure stops before screening anything and
        // every positive gets p / (1 + |N(0)|).
        let w = [1.0, 2.0, -0.5, 3.0, -0.25, 0.7, 1.4, 0.2];
        let side = SideInfo::covariates(vec![0.0; 8]);
        let e = adaptive_knockoff_evalues(&w, &side, &DefaultOrdering, 0.5, 8).unwrap();
        for j in 0..8 {
            let expect = if w[j] > 0.0 { 8.0 / 3.0 } else { 0.0 };
            assert_eq!(e.as_slice()[j], expect);
        }
    }

    #[test]
    fn adaptive_hand_simulation_of_screening() {
        // Order fixed as 4, 2, 0, 1, 3. Statistics [ -1, 2, -3, 4, -5 ]:
        // k = 0: N = 3, P = 2, ratio 2.0
        // k = 1 (screen 4): N = 2, P = 2, ratio 1.5
        // k = 2 (screen 2): N = 1, P = 2, ratio 1.0 -> stops at alpha = 1;
        // at alpha = 0.6 it continues:
        // k = 3 (screen 0): N = 0, P = 2, ratio 0.5 -> stops.
        let w = [-1.0, 2.0, -3.0, 4.0, -5.0];
        let side = SideInfo::covariates(vec![0.0; 5]);
        let rule = FixedOrder(vec![4, 2, 0, 1, 3]);
        let e = adaptive_knockoff_evalues(&w, &side, &rule, 1.0, 5).unwrap();
        assert_eq!(e.as_slice(), &[0.0, 2.5, 0.0, 2.5, 0.0]);
        let e = adaptive_knockoff_evalues(&w, &side, &rule, 0.6, 5).unwrap();
        assert_eq!(e.as_slice(), &[0.0, 5.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn adaptive_all_negative_gives_zero_evalues() {
        let w = [-1.0, -2.0, -0.5];
        let side = SideInfo::covariates(vec![0.0; 3]);
        let e = adaptive_knockoff_evalues(&w, &side, &DefaultOrdering, 0.2, 3).unwrap();
        assert_eq!(e.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn adaptive_rejects_rescreening_rules() {
        let w = [1.0, -1.0, 2.0];
        let side = SideInfo::covariates(vec![0.0; 3]);
        let twice = FixedOrder(vec![0, 0, 1]);
        assert!(matches!(
            adaptive_knockoff_evalues(&w, &side, &twice, 0.5, 3),
            Err(Error::InvalidOrdering { .. })
        ));
        let short = FixedOrder(vec![0, 1]);
        assert!(matches!(
            adaptive_knockoff_evalues(&w, &side, &short, 0.5, 3),
            Err(Error::InvalidOrdering { .. })
        ));
    }

    #[test]
    fn default_ordering_screens_low_priority_first() {
        // u = exp(-j) style scores: later features are screened first.
        let side = SideInfo::covariates(vec![1.0, 0.5, 0.25, 0.125]);
        let mags = [1.0, 1.0, 1.0, 1.0];
        let order = DefaultOrdering.screening_order(&side, &mags);
        assert_eq!(order, vec![3, 2, 1, 0]);
        // Ties broken by descending magnitude.
        let flat = SideInfo::covariates(vec![0.0; 4]);
        let mags = [0.5, 3.0, 1.0, 2.0];
        let order = DefaultOrdering.screening_order(&flat, &mags);
        assert_eq!(order, vec![1, 3, 2, 0]);
    }

    #[test]
    fn adaptive_null_budget_holds_empirically() {
        // All-null statistics with i.i.d. signs: mean of sum e_j stays
        // near or below p (the relaxed budget).
        let p = 12;
        let side = SideInfo::covariates((0..p).map(|j| (-(j as f64)).exp()).collect());
        let mut stream = RngStream::new(31, 0);
        let reps = 2000;
        let mut total = 0.0;
        for _ in 0..reps {
            let w: Vec<f64> = (0..p).map(|_| stream.std_normal()).collect();
            let e = adaptive_knockoff_evalues(&w, &side, &DefaultOrdering, 0.4, p).unwrap();
            total += e.as_slice().iter().sum::<f64>();
        }
        let mean = total / reps as f64;
        // Sum of e-values is at most p^2/1; crude but sufficient bound on
        // the MC error at this sample size.
        assert!(
            mean <= p as f64 + 4.0 * (p as f64) / (reps as f64).sqrt() * 3.0,
            "mean budget {mean} for p = {p}"
        );
    }
}
