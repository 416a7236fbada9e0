//! The knockoff filter, knockoff e-values, the e-BH procedure, and the
//! derandomized pipeline that ties them together.
//!
//! A single knockoff run selects `{j : w_j >= T}` for a data-dependent
//! threshold `T`. That selection is exactly the e-BH procedure applied to
//! the run's knockoff e-values, which is what licenses averaging: e-values
//! from independent runs are averaged and fed to e-BH once, keeping
//! finite-sample FDR control while stripping out the sampling variability
//! of any single knockoff draw.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knockoffs::GaussianModel;
use crate::numerics::{Purpose, RngStream};
use crate::stats::{ImportanceStatistic, ImportanceVector};

/// Knockoff threshold for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Selected threshold; `f64::INFINITY` when no candidate qualifies.
    pub threshold: f64,
    /// `#{j : w_j >= T}` at the chosen threshold (0 when infinite).
    pub num_selected: usize,
    /// `#{j : w_j <= -T}` at the chosen threshold (0 when infinite).
    pub num_negative: usize,
    /// Offset used in the estimate `(c + negatives) / positives`.
    pub offset_c: f64,
    /// Target level the threshold was computed at.
    pub alpha_kn: f64,
    /// True when the run stopped because too few statistics remained above
    /// the candidate (the hopeless case), not because the estimate dropped
    /// below `alpha_kn`.
    pub early_stopped: bool,
}

impl ThresholdResult {
    pub fn is_finite(&self) -> bool {
        self.threshold.is_finite()
    }
}

/// One e-value per feature, all non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EValueVector(pub Vec<f64>);

impl EValueVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Output of a selection procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected feature indices, ascending, zero-based.
    pub selected: Vec<usize>,
    /// Number of order statistics passing the e-BH inequality (0 when
    /// nothing is selected); equals `selected.len()` for e-BH selections.
    pub k_hat: usize,
    /// The e-value cutoff `p / (level * k_hat)`, infinite when `k_hat = 0`.
    pub cutoff: f64,
}

impl SelectionResult {
    fn empty() -> Self {
        Self {
            selected: Vec::new(),
            k_hat: 0,
            cutoff: f64::INFINITY,
        }
    }
}

/// Knockoff threshold
/// `T = inf{t : (c + #{w_j <= -t}) / #{w_j >= t} <= alpha_kn}`,
/// with `t` ranging over the positive magnitudes of `w`.
///
/// With `early_stop`, the scan additionally halts at the first `t` where
/// `#{w_j >= t} < 1/alpha_kn`: past that point the estimate can never reach
/// `alpha_kn` again, so the run is hopeless and the scan gives up early,
/// which costs nothing and saves the corresponding e-values from collapsing
/// to zero. `early_stopped` in the result records that the second clause,
/// not the first, fired.
pub fn knockoff_threshold(
    w: &[f64],
    alpha_kn: f64,
    offset_c: f64,
    early_stop: bool,
) -> ThresholdResult {
    assert!(
        alpha_kn > 0.0 && alpha_kn <= 1.0,
        "alpha_kn must be in (0, 1]"
    );
    assert!(offset_c >= 0.0, "offset_c must be non-negative");
    let mut candidates: Vec<f64> = w.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    candidates.dedup();
    for &t in &candidates {
        let num_ge = w.iter().filter(|&&v| v >= t).count();
        let num_le = w.iter().filter(|&&v| v <= -t).count();
        let ratio_ok = num_ge > 0 && (offset_c + num_le as f64) <= alpha_kn * num_ge as f64;
        let hopeless = early_stop && (num_ge as f64) < 1.0 / alpha_kn;
        if ratio_ok || hopeless {
            return ThresholdResult {
                threshold: t,
                num_selected: num_ge,
                num_negative: num_le,
                offset_c,
                alpha_kn,
                early_stopped: hopeless && !ratio_ok,
            };
        }
    }
    ThresholdResult {
        threshold: f64::INFINITY,
        num_selected: 0,
        num_negative: 0,
        offset_c,
        alpha_kn,
        early_stopped: false,
    }
}

/// Knockoff e-values for one run:
/// `e_j = p * 1{w_j >= T} / (1 + #{w_k <= -T})`.
///
/// Requires the threshold to have been computed with offset `c >= 1`; the
/// unit in the denominator is what pays for the budget `sum of null means
/// <= p`, and offsets below one break it.
pub fn knockoff_evalues(w: &[f64], thr: &ThresholdResult, p_dim: usize) -> Result<EValueVector> {
    if thr.offset_c < 1.0 {
        return Err(Error::OffsetTooSmall { c: thr.offset_c });
    }
    Ok(evalues_with_denominator(w, thr, p_dim, 1.0))
}

/// Heatmap variant allowing offsets below one: the denominator uses
/// `max(c, 1)` and the boolean reports whether the configuration is valid
/// (i.e. `c >= 1`). Meant for sensitivity studies, not for inference.
pub fn knockoff_evalues_with_offset(
    w: &[f64],
    thr: &ThresholdResult,
    p_dim: usize,
) -> (EValueVector, bool) {
    let base = thr.offset_c.max(1.0);
    (
        evalues_with_denominator(w, thr, p_dim, base),
        thr.offset_c >= 1.0,
    )
}

fn evalues_with_denominator(
    w: &[f64],
    thr: &ThresholdResult,
    p_dim: usize,
    base: f64,
) -> EValueVector {
    debug_assert_eq!(w.len(), p_dim);
    if !thr.threshold.is_finite() {
        return EValueVector(vec![0.0; p_dim]);
    }
    let t = thr.threshold;
    let num_le = w.iter().filter(|&&v| v <= -t).count() as f64;
    let denom = base + num_le;
    let p = p_dim as f64;
    EValueVector(
        w.iter()
            .map(|&v| if v >= t { p / denom } else { 0.0 })
            .collect(),
    )
}

/// The e-BH procedure at `level`: with descending order statistics
/// `e_(1) >= e_(2) >= ...`, find `k_hat = max{k : e_(k) >= p/(level*k)}` and
/// select `{j : e_j >= p/(level * k_hat)}`. Ties are resolved by value, so
/// the selection never depends on index order.
pub fn ebh(evalues: &EValueVector, level: f64) -> SelectionResult {
    assert!(level > 0.0 && level <= 1.0, "level must be in (0, 1]");
    let p = evalues.len();
    if p == 0 {
        return SelectionResult::empty();
    }
    assert!(
        evalues.as_slice().iter().all(|&e| e >= 0.0 && !e.is_nan()),
        "e-values must be non-negative"
    );
    let mut sorted: Vec<f64> = evalues.as_slice().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("no NaN e-values"));
    let pf = p as f64;
    let mut k_hat = 0;
    for k in 1..=p {
        if sorted[k - 1] >= pf / (level * k as f64) {
            k_hat = k;
        }
    }
    if k_hat == 0 {
        return SelectionResult::empty();
    }
    let cutoff = pf / (level * k_hat as f64);
    let selected: Vec<usize> = (0..p)
        .filter(|&j| evalues.as_slice()[j] >= cutoff)
        .collect();
    SelectionResult {
        k_hat,
        cutoff,
        selected,
    }
}

/// The classic knockoff filter at level `alpha`: threshold with offset 1 and
/// no early stopping, then select `{j : w_j >= T}`.
pub fn knockoff_filter(w: &[f64], alpha: f64) -> SelectionResult {
    let thr = knockoff_threshold(w, alpha, 1.0, false);
    if !thr.is_finite() {
        return SelectionResult::empty();
    }
    let selected: Vec<usize> = (0..w.len()).filter(|&j| w[j] >= thr.threshold).collect();
    let k_hat = selected.len();
    SelectionResult {
        k_hat,
        cutoff: thr.threshold,
        selected,
    }
}

/// Options for [`derandomized_knockoffs`].
#[derive(Debug, Clone)]
pub struct DerandomizeOptions {
    /// Per-run knockoff threshold level; half the e-BH level is the
    /// recommended default.
    pub alpha_kn: f64,
    /// e-BH level; this is the FDR target of the aggregated selection.
    pub alpha_ebh: f64,
    /// Number of knockoff runs to average over.
    pub m_runs: usize,
    /// Per-run early stopping (on by default; disabling it reproduces the
    /// plain threshold scan).
    pub early_stop: bool,
    /// Keep the per-run e-value vectors in the output.
    pub keep_per_run: bool,
}

impl DerandomizeOptions {
    /// Recommended defaults at e-BH level `alpha_ebh`: `alpha_kn` at half
    /// the level, offset 1, early stopping, 50 runs.
    pub fn at_level(alpha_ebh: f64) -> Self {
        Self {
            alpha_kn: alpha_ebh / 2.0,
            alpha_ebh,
            m_runs: 50,
            early_stop: true,
            keep_per_run: false,
        }
    }
}

/// Output of the derandomized pipeline.
#[derive(Debug, Clone)]
pub struct DerandomizedOutput {
    pub selection: SelectionResult,
    /// e-values averaged over runs, the input to e-BH.
    pub evalues: EValueVector,
    /// Per-run e-values when requested.
    pub per_run: Option<Vec<EValueVector>>,
}

/// Derandomized knockoffs for a Gaussian model-X design.
///
/// Runs `m = 1..=m_runs` independent knockoff draws (stream `(master_seed,
/// run m)`), computes the statistic and its per-run e-values with offset 1,
/// averages the e-values in run order, and applies e-BH at `alpha_ebh`.
/// Runs execute in parallel when a rayon pool is available; the aggregation
/// order is fixed, so the result is bit-identical for any worker count.
pub fn derandomized_knockoffs(
    x: &Array2<f64>,
    y: &Array1<f64>,
    model: &GaussianModel,
    statistic: &dyn ImportanceStatistic,
    options: &DerandomizeOptions,
    master_seed: u64,
) -> Result<DerandomizedOutput> {
    let p = model.p();
    derandomize(p, options, |m| {
        let mut kn_stream = RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Knockoff);
        let xt = model.sample_knockoffs(x, &mut kn_stream)?;
        let mut stat_stream =
            RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Statistic);
        statistic.compute(x, &xt, y, &mut stat_stream)
    })
}

/// Shared derandomization loop: `run_statistic(m)` produces the importance
/// vector of run `m` (1-based); per-run e-values use offset 1 and the
/// configured early stopping; the average is accumulated in ascending run
/// order regardless of execution schedule.
pub fn derandomize<F>(
    p: usize,
    options: &DerandomizeOptions,
    run_statistic: F,
) -> Result<DerandomizedOutput>
where
    F: Fn(usize) -> Result<ImportanceVector> + Sync,
{
    derandomize_evalues(p, options, |m| {
        let w = run_statistic(m)?;
        if w.len() != p {
            return Err(Error::DimensionMismatch {
                context: format!("run {m} produced {} statistics for p = {p}", w.len()),
            });
        }
        let thr = knockoff_threshold(&w, options.alpha_kn, 1.0, options.early_stop);
        knockoff_evalues(&w, &thr, p)
    })
}

/// Generic form of the loop for procedures with their own per-run e-value
/// construction (weighted, adaptive, multi-environment): `run_evalues(m)`
/// yields the e-values of run `m`, and this function averages them in run
/// order and applies e-BH at `alpha_ebh`.
pub fn derandomize_evalues<F>(
    p: usize,
    options: &DerandomizeOptions,
    run_evalues: F,
) -> Result<DerandomizedOutput>
where
    F: Fn(usize) -> Result<EValueVector> + Sync,
{
    if options.m_runs == 0 {
        return Err(Error::ConfigInvalid {
            reason: "m_runs must be at least 1".into(),
        });
    }
    if !(options.alpha_kn > 0.0 && options.alpha_kn <= 1.0)
        || !(options.alpha_ebh > 0.0 && options.alpha_ebh <= 1.0)
    {
        return Err(Error::ConfigInvalid {
            reason: "alpha_kn and alpha_ebh must lie in (0, 1]".into(),
        });
    }
    let per_run: Vec<EValueVector> = (1..=options.m_runs)
        .into_par_iter()
        .map(|m| {
            let e = run_evalues(m)?;
            if e.len() != p {
                return Err(Error::DimensionMismatch {
                    context: format!("run {m} produced {} e-values for p = {p}", e.len()),
                });
            }
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut avg = vec![0.0_f64; p];
    for run in &per_run {
        for (a, &e) in avg.iter_mut().zip(run.as_slice()) {
            *a += e;
        }
    }
    let mf = options.m_runs as f64;
    for a in &mut avg {
        *a /= mf;
    }
    let evalues = EValueVector(avg);
    let selection = ebh(&evalues, options.alpha_ebh);
    Ok(DerandomizedOutput {
        selection,
        evalues,
        per_run: options.keep_per_run.then_some(per_run),
    })
}

/// How close each nonzero e-value sits to the e-BH selection floor
/// `p / (level * |S|)`. Ratios near one mean the selection is operating at
/// the edge of its budget; large ratios mean slack. Advisory only.
#[derive(Debug, Clone)]
pub struct SharpnessReport {
    /// The e-BH floor for the realized selection size.
    pub floor: f64,
    /// `(feature, e_j / floor)` for every feature with a nonzero e-value.
    pub ratios: Vec<(usize, f64)>,
}

/// Compares nonzero e-values to the e-BH floor of the given selection.
/// Returns `None` when nothing was selected (no floor to compare against).
pub fn sharpness_diagnostic(
    evalues: &EValueVector,
    selection: &SelectionResult,
    level: f64,
) -> Option<SharpnessReport> {
    if selection.selected.is_empty() {
        return None;
    }
    let p = evalues.len() as f64;
    let floor = p / (level * selection.selected.len() as f64);
    let ratios = evalues
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(j, &e)| (j, e / floor))
        .collect();
    Some(SharpnessReport { floor, ratios })
}
