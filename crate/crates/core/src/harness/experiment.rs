//! The experiment loop: `replicates` dataset draws, `reruns` method
//! repetitions per dataset, both methods on every run, deterministic for a
//! fixed config regardless of worker count.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::{derandomized_knockoffs, knockoff_filter, DerandomizeOptions};
use crate::harness::config::{Covariance, ExperimentConfig};
use crate::harness::dataset::{ar1_covariance, generate_dataset};
use crate::harness::metrics::{score_selection, MethodMetrics, MetricsReport};
use crate::knockoffs::GaussianModel;
use crate::numerics::{Purpose, RngStream, SpdMatrix};
use crate::stats::LcdStatistic;

/// Which procedure produced a run record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// One knockoff draw, knockoff filter at `alpha_ebh`.
    Original,
    /// `m_runs` knockoff draws, averaged e-values, e-BH at `alpha_ebh`.
    Derandomized,
}

/// One `(method, dataset, rerun)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: MethodKind,
    /// Dataset draw, 1-based.
    pub dataset: usize,
    /// Method rerun within the dataset, 1-based.
    pub rerun: usize,
    pub selected: Vec<usize>,
    pub power_contribution: f64,
    pub fdp: f64,
}

/// Everything an experiment produces: the echoed config, aggregated
/// metrics per method, and the raw per-run table.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub metrics: MetricsReport,
    pub records: Vec<RunRecord>,
}

/// Runs the experiment described by `cfg`.
///
/// Dataset `d` comes from stream `(master_seed, d)` and is identical across
/// reruns; each `(d, k)` rerun gets a child master seed drawn up front from
/// a single derivation stream, so results do not depend on scheduling. Both
/// methods run on every `(d, k)` cell: the original filter consumes one
/// knockoff draw, the derandomized procedure `m_runs` draws.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let Covariance::Ar1(rho) = cfg.covariance;
    let sigma = SpdMatrix::new(ar1_covariance(cfg.p, rho))?;
    let model = GaussianModel::equicorrelated(ndarray::Array1::zeros(cfg.p), sigma)?;
    let statistic = LcdStatistic {
        family: cfg.model_family,
    };
    let options = DerandomizeOptions {
        alpha_kn: cfg.alpha_kn,
        alpha_ebh: cfg.alpha_ebh,
        m_runs: cfg.m_runs,
        early_stop: true,
        keep_per_run: false,
    };

    let mut seed_stream = RngStream::for_purpose(cfg.master_seed, 0, 0, Purpose::Seed);
    let child_seeds: Vec<u64> = (0..cfg.replicates * cfg.reruns)
        .map(|_| seed_stream.next_seed())
        .collect();

    let cells: Vec<(usize, usize)> = (1..=cfg.replicates)
        .flat_map(|d| (1..=cfg.reruns).map(move |k| (d, k)))
        .collect();
    let per_cell: Vec<(RunRecord, RunRecord)> = cells
        .par_iter()
        .map(|&(d, k)| -> Result<(RunRecord, RunRecord)> {
            let mut data_stream =
                RngStream::for_purpose(cfg.master_seed, d as u64, 0, Purpose::Dataset);
            let (x, y, truth) = generate_dataset(cfg, &mut data_stream)?;
            let child = child_seeds[(d - 1) * cfg.reruns + (k - 1)];

            let mut kn = RngStream::for_purpose(child, 1, 0, Purpose::Knockoff);
            let xt = model.sample_knockoffs(&x, &mut kn)?;
            let mut st = RngStream::for_purpose(child, 1, 0, Purpose::Statistic);
            let w = crate::stats::lcd_statistic(&x, &xt, &y, cfg.model_family, &mut st)?;
            let original_sel = knockoff_filter(&w, cfg.alpha_ebh);
            let (power, fdp) = score_selection(&original_sel, &truth);
            let original = RunRecord {
                method: MethodKind::Original,
                dataset: d,
                rerun: k,
                selected: original_sel.selected,
                power_contribution: power,
                fdp,
            };

            let out = derandomized_knockoffs(&x, &y, &model, &statistic, &options, child)?;
            let (power, fdp) = score_selection(&out.selection, &truth);
            let derandomized = RunRecord {
                method: MethodKind::Derandomized,
                dataset: d,
                rerun: k,
                selected: out.selection.selected,
                power_contribution: power,
                fdp,
            };
            Ok((original, derandomized))
        })
        .collect::<Result<Vec<_>>>()?;

    let metrics = MetricsReport {
        original: collect_metrics(cfg, &per_cell, |pair| &pair.0),
        derandomized: collect_metrics(cfg, &per_cell, |pair| &pair.1),
    };
    let mut records = Vec::with_capacity(per_cell.len() * 2);
    for (original, derandomized) in per_cell {
        records.push(original);
        records.push(derandomized);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        metrics,
        records,
    })
}

fn collect_metrics<'a>(
    cfg: &ExperimentConfig,
    per_cell: &'a [(RunRecord, RunRecord)],
    pick: impl Fn(&'a (RunRecord, RunRecord)) -> &'a RunRecord,
) -> MethodMetrics {
    let mut selections = vec![Vec::with_capacity(cfg.reruns); cfg.replicates];
    let mut powers = Vec::with_capacity(per_cell.len());
    let mut fdps = Vec::with_capacity(per_cell.len());
    for pair in per_cell {
        let record = pick(pair);
        selections[record.dataset - 1].push(record.selected.clone());
        powers.push(record.power_contribution);
        fdps.push(record.fdp);
    }
    MethodMetrics::from_runs(&selections, &powers, &fdps, cfg.p)
}

/// Writes the per-run table as CSV: one row per `(method, dataset, rerun)`
/// with the selection size, scores, and the selected indices joined by
/// `;` for audit.
pub fn write_records_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::FileUnreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    writer
        .write_record([
            "method",
            "dataset",
            "rerun",
            "selected_count",
            "power_contribution",
            "fdp",
            "selected",
        ])
        .map_err(io_error)?;
    for r in &report.records {
        let method = match r.method {
            MethodKind::Original => "original",
            MethodKind::Derandomized => "derandomized",
        };
        let joined = r
            .selected
            .iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writer
            .write_record([
                method,
                &r.dataset.to_string(),
                &r.rerun.to_string(),
                &r.selected.len().to_string(),
                &r.power_contribution.to_string(),
                &r.fdp.to_string(),
                &joined,
            ])
            .map_err(io_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the JSON summary: config echo, seed, and both methods' metrics.
pub fn write_summary_json(report: &ExperimentReport, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a ExperimentConfig,
        master_seed: u64,
        metrics: &'a MetricsReport,
    }
    let summary = Summary {
        config: &report.config,
        master_seed: report.config.master_seed,
        metrics: &report.metrics,
    };
    let mut file = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(&summary).expect("serializable report");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

fn io_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
