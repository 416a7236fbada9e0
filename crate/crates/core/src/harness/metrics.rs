//! Scoring and variability metrics for repeated selections.

use serde::Serialize;

use crate::filter::SelectionResult;
use crate::harness::dataset::ExperimentTruth;

/// Power contribution and false discovery proportion of one selection:
/// `(|S and H1| / |H1|, |S and H0| / (|S| v 1))`.
pub fn score_selection(selection: &SelectionResult, truth: &ExperimentTruth) -> (f64, f64) {
    let h1 = &truth.nonnull;
    let true_hits = selection
        .selected
        .iter()
        .filter(|j| h1.binary_search(j).is_ok())
        .count();
    let false_hits = selection.selected.len() - true_hits;
    let power = if h1.is_empty() {
        0.0
    } else {
        true_hits as f64 / h1.len() as f64
    };
    let fdp = false_hits as f64 / (selection.selected.len().max(1)) as f64;
    (power, fdp)
}

/// Marginal and conditional selection variability of a table of selected
/// sets indexed by dataset draw `d` and method rerun `k`.
///
/// With `p_hat_j` the selection frequency of feature `j` over all `(d, k)`,
/// `p_hat_jd` the frequency within dataset `d`, and `s_hat`, `s_hat_d` the
/// corresponding mean selection sizes:
///
/// marginal    = `sum_j p_hat_j (1 - p_hat_j) / [p (s_hat/p)(1 - s_hat/p)]`
/// conditional = `sum_d sum_j p_hat_jd (1 - p_hat_jd)
///                / sum_d p (s_hat_d/p)(1 - s_hat_d/p)`
///
/// Both are 0 when every run selects the same set and near 1 when runs pick
/// sets of the observed size uniformly at random. A zero denominator (all
/// runs empty, or all full) returns 0 by convention.
pub fn selection_variability(selections: &[Vec<Vec<usize>>], p: usize) -> (f64, f64) {
    let d_count = selections.len();
    assert!(d_count > 0 && p > 0, "need at least one dataset and feature");
    let k_count = selections[0].len();
    assert!(
        selections.iter().all(|runs| runs.len() == k_count) && k_count > 0,
        "each dataset needs the same positive number of reruns"
    );
    let total_runs = (d_count * k_count) as f64;
    let pf = p as f64;

    let mut counts = vec![0.0_f64; p];
    let mut size_sum = 0.0;
    let mut marg_denominator = 0.0;
    let mut cond_numerator = 0.0;
    let mut cond_denominator = 0.0;
    for runs in selections {
        let mut d_counts = vec![0.0_f64; p];
        let mut d_size = 0.0;
        for set in runs {
            for &j in set {
                assert!(j < p, "selected index {j} out of range");
                counts[j] += 1.0;
                d_counts[j] += 1.0;
            }
            size_sum += set.len() as f64;
            d_size += set.len() as f64;
        }
        let s_d = d_size / k_count as f64;
        cond_numerator += d_counts
            .iter()
            .map(|&c| {
                let q = c / k_count as f64;
                q * (1.0 - q)
            })
            .sum::<f64>();
        cond_denominator += pf * (s_d / pf) * (1.0 - s_d / pf);
    }
    let s_hat = size_sum / total_runs;
    let marg_numerator: f64 = counts
        .iter()
        .map(|&c| {
            let q = c / total_runs;
            q * (1.0 - q)
        })
        .sum();
    marg_denominator += pf * (s_hat / pf) * (1.0 - s_hat / pf);

    let marginal = if marg_denominator > 0.0 {
        marg_numerator / marg_denominator
    } else {
        0.0
    };
    let conditional = if cond_denominator > 0.0 {
        cond_numerator / cond_denominator
    } else {
        0.0
    };
    (marginal, conditional)
}

/// Per-feature selection frequency over knockoff runs, the vector the
/// pre-e-value derandomization literature thresholds at 1/2.
pub fn baseline_frequency(selections: &[Vec<usize>], p: usize) -> Vec<f64> {
    assert!(!selections.is_empty(), "need at least one run");
    let m = selections.len() as f64;
    let mut freq = vec![0.0; p];
    for set in selections {
        for &j in set {
            assert!(j < p, "selected index {j} out of range");
            freq[j] += 1.0;
        }
    }
    for f in &mut freq {
        *f /= m;
    }
    freq
}

/// Aggregated metrics of one method over the full `(d, k)` table.
#[derive(Debug, Clone, Serialize)]
pub struct MethodMetrics {
    pub power: f64,
    pub fdr: f64,
    pub marginal_variability: f64,
    pub conditional_variability: f64,
    /// `p_hat_j`: selection frequency over all runs.
    pub selection_frequency: Vec<f64>,
    /// `p_hat_jd`: per-dataset selection frequencies, one row per dataset.
    pub per_dataset_frequency: Vec<Vec<f64>>,
}

impl MethodMetrics {
    pub(crate) fn from_runs(
        selections: &[Vec<Vec<usize>>],
        powers: &[f64],
        fdps: &[f64],
        p: usize,
    ) -> Self {
        let (marginal, conditional) = selection_variability(selections, p);
        let runs = powers.len() as f64;
        let per_dataset_frequency: Vec<Vec<f64>> = selections
            .iter()
            .map(|runs| baseline_frequency(runs, p))
            .collect();
        let k_count = selections[0].len() as f64;
        let d_count = selections.len() as f64;
        let mut selection_frequency = vec![0.0; p];
        for row in &per_dataset_frequency {
            for (acc, &v) in selection_frequency.iter_mut().zip(row) {
                *acc += v * k_count;
            }
        }
        for v in &mut selection_frequency {
            *v /= d_count * k_count;
        }
        Self {
            power: powers.iter().sum::<f64>() / runs,
            fdr: fdps.iter().sum::<f64>() / runs,
            marginal_variability: marginal,
            conditional_variability: conditional,
            selection_frequency,
            per_dataset_frequency,
        }
    }
}

/// Metrics of both methods on the same experiment.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub original: MethodMetrics,
    pub derandomized: MethodMetrics,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(indices: &[usize]) -> SelectionResult {
        SelectionResult {
            selected: indices.to_vec(),
            k_hat: indices.len(),
            cutoff: 0.0,
        }
    }

    fn truth(nonnull: &[usize], p: usize) -> ExperimentTruth {
        let mut beta = vec![0.0; p];
        for &j in nonnull {
            beta[j] = 1.0;
        }
        ExperimentTruth {
            nonnull: nonnull.to_vec(),
            beta,
        }
    }

    #[test]
    fn score_worked_examples() {
        let t = truth(&[0], 10);
        assert_eq!(score_selection(&sel(&[0, 1]), &t), (1.0, 0.5));
        assert_eq!(score_selection(&sel(&[]), &t), (0.0, 0.0));
        assert_eq!(score_selection(&sel(&[0]), &t), (1.0, 0.0));
    }

    #[test]
    fn variability_hand_oracle() {
        // D = 2, K = 2, p = 3 with selections {0}, {0,1} | {2}, {}:
        //   p_hat = (1/2, 1/4, 1/4), s_hat = 1
        //   marginal = (1/4 + 3/16 + 3/16) / (3 * 1/3 * 2/3) = 15/16
        //   p_hat_(j,1) = (1, 1/2, 0), p_hat_(j,2) = (0, 0, 1/2)
        //   conditional = (1/4 + 1/4) / (3*(1/2)(1/2) + 3*(1/6)(5/6))
        //               = (1/2) / (7/6) = 3/7
        let table = vec![vec![vec![0], vec![0, 1]], vec![vec![2], vec![]]];
        let (marginal, conditional) = selection_variability(&table, 3);
        assert!((marginal - 15.0 / 16.0).abs() < 1e-12);
        assert!((conditional - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn identical_selections_have_zero_variability() {
        let table = vec![vec![vec![1, 2], vec![1, 2]], vec![vec![1, 2], vec![1, 2]]];
        assert_eq!(selection_variability(&table, 4), (0.0, 0.0));
        // All-empty tables hit the zero-denominator convention.
        let empty = vec![vec![vec![], vec![]], vec![vec![], vec![]]];
        assert_eq!(selection_variability(&empty, 4), (0.0, 0.0));
    }

    #[test]
    fn random_selections_approach_unit_marginal_variability() {
        use crate::numerics::RngStream;
        let p = 30;
        let size = 3;
        let mut stream = RngStream::new(77, 0);
        let table: Vec<Vec<Vec<usize>>> = (0..40)
            .map(|_| {
                (0..10)
                    .map(|_| {
                        let mut idx = stream.permutation(p);
                        idx.truncate(size);
                        idx.sort_unstable();
                        idx
                    })
                    .collect()
            })
            .collect();
        let (marginal, conditional) = selection_variability(&table, p);
        assert!((marginal - 1.0).abs() < 0.1, "marginal {marginal}");
        // The conditional numerator is a plug-in variance over K = 10 runs
        // per dataset, biased by the usual 1 - 1/K factor.
        assert!((conditional - 0.9).abs() < 0.08, "conditional {conditional}");
    }

    #[test]
    fn single_dataset_collapses_the_two_measures() {
        // With D = 1, both measures see the same runs; only the
        // normalization differs, and for this table they coincide.
        let table = vec![vec![vec![0], vec![1]]];
        let (marginal, conditional) = selection_variability(&table, 2);
        assert!((marginal - conditional).abs() < 1e-12);
        assert!(marginal > 0.0);
    }

    #[test]
    fn baseline_frequency_counts() {
        let runs = vec![vec![0, 2], vec![0], vec![0, 1], vec![2]];
        let freq = baseline_frequency(&runs, 4);
        assert_eq!(freq, vec![0.75, 0.25, 0.5, 0.0]);
    }
}
