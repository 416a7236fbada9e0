//! Loading real tabular data into the pipeline: CSV parsing, the cleaning
//! rules (drop incomplete rows, drop rare binary features, drop constant
//! columns), standardization, and a rerun-based stability study comparing
//! the original and derandomized procedures on the loaded data.

use std::io::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::{derandomized_knockoffs, knockoff_filter, DerandomizeOptions};
use crate::knockoffs::second_order_model;
use crate::numerics::{Purpose, RngStream};
use crate::stats::{lcd_statistic, Family, LcdStatistic};

/// A cleaned, standardized dataset ready for selection.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
}

/// Where the data came from and what cleaning did to it.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub source: String,
    /// Human-readable log, one entry per dropped row or column plus the
    /// final standardization step, in application order.
    pub log: Vec<String>,
}

/// Parsed but uncleaned table: row-major cells, `None` = missing.
struct RawTable {
    feature_names: Vec<String>,
    /// Original 1-based data row number of each kept row.
    row_numbers: Vec<usize>,
    rows: Vec<Vec<Option<f64>>>,
    response: Vec<Option<f64>>,
}

fn parse_cell(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn unreadable(path: &Path, reason: impl ToString) -> Error {
    Error::FileUnreadable {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Parses the CSV into a raw table, excluding the response column and (when
/// given) the environment-label column from the features. Rows with a
/// missing environment label are dropped here and logged; returned labels
/// align with the returned rows.
fn parse_csv(
    path: &Path,
    response_column: &str,
    env_column: Option<&str>,
) -> Result<(RawTable, Vec<String>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| unreadable(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| unreadable(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let response_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::ResponseMissing {
            name: response_column.to_string(),
        })?;
    let env_idx = match env_column {
        None => None,
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::ConfigInvalid {
                reason: format!("environment column {name:?} not found in header"),
            }
        })?),
    };
    if env_idx == Some(response_idx) {
        return Err(Error::ConfigInvalid {
            reason: "environment column equals the response column".into(),
        });
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx && Some(*i) != env_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows = Vec::new();
    let mut response = Vec::new();
    let mut row_numbers = Vec::new();
    let mut labels = Vec::new();
    let mut log = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| unreadable(path, format!("row {}: {e}", i + 1)))?;
        let mut row = Vec::with_capacity(feature_names.len());
        let mut resp = None;
        let mut label = None;
        for (c, cell) in record.iter().enumerate() {
            if c == response_idx {
                resp = parse_cell(cell);
            } else if Some(c) == env_idx {
                let t = cell.trim();
                if !t.is_empty() && !t.eq_ignore_ascii_case("na") {
                    label = Some(t.to_string());
                }
            } else {
                row.push(parse_cell(cell));
            }
        }
        if env_idx.is_some() {
            match label {
                Some(l) => labels.push(l),
                None => {
                    log.push(format!("dropped row {}: missing environment label", i + 1));
                    continue;
                }
            }
        }
        rows.push(row);
        response.push(resp);
        row_numbers.push(i + 1);
    }
    Ok((
        RawTable {
            feature_names,
            row_numbers,
            rows,
            response,
        },
        labels,
        log,
    ))
}

fn to_arrays(table: &RawTable) -> (Array2<f64>, Array1<f64>) {
    let n = table.rows.len();
    let p = table.feature_names.len();
    let mut x = Array2::<f64>::zeros((n, p));
    let mut y = Array1::<f64>::zeros(n);
    for (i, row) in table.rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[[i, j]] = v.expect("cleaned rows are complete");
        }
        y[i] = table.response[i].expect("cleaned rows are complete");
    }
    (x, y)
}

/// Loads a CSV with a header row, drops rows with any missing cell, drops
/// binary feature columns with fewer than `min_occurrence` ones, drops
/// zero-variance columns, and standardizes what remains to mean 0 and
/// variance 1. Missing means an empty cell, `NA` (any case), or an
/// unparseable number. Every drop is logged in order.
pub fn load_csv(path: &Path, response_column: &str, min_occurrence: usize) -> Result<Dataset> {
    let (table, _, mut log) = parse_csv(path, response_column, None)?;
    let (clean, clean_log) = clean(table, min_occurrence)?;
    log.extend(clean_log);
    let (mut x, y) = to_arrays(&clean);
    standardize(&mut x);
    log.push(format!(
        "standardized {} feature columns to mean 0, variance 1",
        clean.feature_names.len()
    ));
    Ok(Dataset {
        x,
        y,
        feature_names: clean.feature_names,
        provenance: Provenance {
            source: path.display().to_string(),
            log,
        },
    })
}

/// Loads a CSV holding several environments in one table, keyed by the
/// label column `env_column`, and returns one dataset per distinct label
/// (labels sorted). Cleaning decisions and standardization are made on the
/// pooled table so every environment shares the same features and column
/// scales; rows with a missing label are dropped like any other incomplete
/// row.
pub fn load_csv_grouped(
    path: &Path,
    response_column: &str,
    env_column: &str,
    min_occurrence: usize,
) -> Result<Vec<(String, Dataset)>> {
    let (table, labels, mut log) = parse_csv(path, response_column, Some(env_column))?;
    let label_by_number: std::collections::HashMap<usize, String> = table
        .row_numbers
        .iter()
        .copied()
        .zip(labels)
        .collect();
    let (clean, clean_log) = clean(table, min_occurrence)?;
    log.extend(clean_log);
    let (mut x, y) = to_arrays(&clean);
    standardize(&mut x);
    log.push(format!(
        "standardized {} feature columns to mean 0, variance 1",
        clean.feature_names.len()
    ));

    let mut groups: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for (i, number) in clean.row_numbers.iter().enumerate() {
        groups
            .entry(label_by_number[number].clone())
            .or_default()
            .push(i);
    }
    log.push(format!(
        "split {} rows into {} environments by {env_column}",
        clean.rows.len(),
        groups.len()
    ));

    Ok(groups
        .into_iter()
        .map(|(label, idx)| {
            let xe = x.select(ndarray::Axis(0), &idx);
            let ye = idx.iter().map(|&i| y[i]).collect::<Array1<f64>>();
            let ds = Dataset {
                x: xe,
                y: ye,
                feature_names: clean.feature_names.clone(),
                provenance: Provenance {
                    source: format!("{} [{env_column} = {label}]", path.display()),
                    log: log.clone(),
                },
            };
            (label, ds)
        })
        .collect())
}

/// The cleaning pass: complete-case rows, then the rare-binary rule, then
/// the zero-variance rule. Pure and idempotent: running it on its own
/// output drops nothing further.
fn clean(table: RawTable, min_occurrence: usize) -> Result<(RawTable, Vec<String>)> {
    let mut log = Vec::new();
    let p = table.feature_names.len();
    if p == 0 {
        return Err(Error::EmptyAfterCleaning {
            reason: "no feature columns besides the response".into(),
        });
    }

    let mut kept_rows = Vec::new();
    let mut kept_numbers = Vec::new();
    let mut kept_response = Vec::new();
    for ((row, resp), number) in table
        .rows
        .into_iter()
        .zip(table.response)
        .zip(table.row_numbers)
    {
        let missing_feature = row.iter().position(|v| v.is_none());
        if let Some(j) = missing_feature {
            log.push(format!(
                "dropped row {number}: missing value in {}",
                table.feature_names[j]
            ));
            continue;
        }
        if resp.is_none() {
            log.push(format!("dropped row {number}: missing response"));
            continue;
        }
        kept_rows.push(row);
        kept_numbers.push(number);
        kept_response.push(resp);
    }
    if kept_rows.is_empty() {
        return Err(Error::EmptyAfterCleaning {
            reason: "every row had a missing value".into(),
        });
    }

    let mut keep_col = vec![true; p];
    for j in 0..p {
        let values: Vec<f64> = kept_rows.iter().map(|r| r[j].unwrap()).collect();
        let binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
        if binary {
            let ones = values.iter().filter(|&&v| v == 1.0).count();
            if ones < min_occurrence {
                keep_col[j] = false;
                log.push(format!(
                    "dropped column {}: binary with {ones} occurrences (< {min_occurrence})",
                    table.feature_names[j]
                ));
                continue;
            }
        }
        if values.iter().all(|&v| v == values[0]) {
            keep_col[j] = false;
            log.push(format!(
                "dropped column {}: zero variance",
                table.feature_names[j]
            ));
        }
    }
    if keep_col.iter().all(|&k| !k) {
        return Err(Error::EmptyAfterCleaning {
            reason: "every feature column was dropped".into(),
        });
    }

    let feature_names: Vec<String> = table
        .feature_names
        .iter()
        .zip(&keep_col)
        .filter(|(_, &k)| k)
        .map(|(name, _)| name.clone())
        .collect();
    let rows: Vec<Vec<Option<f64>>> = kept_rows
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&keep_col)
                .filter(|(_, &k)| k)
                .map(|(v, _)| v)
                .collect()
        })
        .collect();
    Ok((
        RawTable {
            feature_names,
            row_numbers: kept_numbers,
            rows,
            response: kept_response,
        },
        log,
    ))
}

fn standardize(x: &mut Array2<f64>) {
    let n = x.nrows() as f64;
    for mut col in x.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
        let var = col.dot(&col) / n;
        // Zero-variance columns were dropped in cleaning.
        let sd = var.sqrt();
        col.mapv_inplace(|v| v / sd);
    }
}

/// One rerun's outcome on the real dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataRun {
    pub rerun: usize,
    pub selected_original: Vec<usize>,
    pub selected_derandomized: Vec<usize>,
}

/// Rerun study on a loaded dataset.
#[derive(Debug, Clone, Serialize)]
pub struct RealDataSummary {
    pub feature_names: Vec<String>,
    pub runs: Vec<RealDataRun>,
    /// Per-feature selection frequency of the original filter over reruns.
    pub freq_original: Vec<f64>,
    /// Same for the derandomized procedure.
    pub freq_derandomized: Vec<f64>,
}

/// Runs both procedures `reruns` times on the dataset with a second-order
/// Gaussian model fit to `X` and the Gaussian LCD statistic, recording the
/// selections and per-feature selection frequencies. Reruns parallelize;
/// the output is a pure function of the inputs.
pub fn real_data_pipeline(
    ds: &Dataset,
    alpha_kn: f64,
    alpha_ebh: f64,
    m_runs: usize,
    reruns: usize,
    master_seed: u64,
) -> Result<RealDataSummary> {
    if reruns == 0 {
        return Err(Error::ConfigInvalid {
            reason: "reruns must be at least 1".into(),
        });
    }
    let model = second_order_model(&ds.x)?;
    let statistic = LcdStatistic::gaussian();
    let options = DerandomizeOptions {
        alpha_kn,
        alpha_ebh,
        m_runs,
        early_stop: true,
        keep_per_run: false,
    };
    let mut seed_stream = RngStream::for_purpose(master_seed, 0, 0, Purpose::Seed);
    let child_seeds: Vec<u64> = (0..reruns).map(|_| seed_stream.next_seed()).collect();

    let runs: Vec<RealDataRun> = (1..=reruns)
        .into_par_iter()
        .map(|v| -> Result<RealDataRun> {
            let child = child_seeds[v - 1];
            let mut kn = RngStream::for_purpose(child, 1, 0, Purpose::Knockoff);
            let xt = model.sample_knockoffs(&ds.x, &mut kn)?;
            let mut st = RngStream::for_purpose(child, 1, 0, Purpose::Statistic);
            let w = lcd_statistic(&ds.x, &xt, &ds.y, Family::Gaussian, &mut st)?;
            let selected_original = knockoff_filter(&w, alpha_ebh).selected;
            let out = derandomized_knockoffs(&ds.x, &ds.y, &model, &statistic, &options, child)?;
            Ok(RealDataRun {
                rerun: v,
                selected_original,
                selected_derandomized: out.selection.selected,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let p = ds.x.ncols();
    let freq = |pick: fn(&RealDataRun) -> &Vec<usize>| -> Vec<f64> {
        let mut f = vec![0.0; p];
        for run in &runs {
            for &j in pick(run) {
                f[j] += 1.0;
            }
        }
        for v in &mut f {
            *v /= reruns as f64;
        }
        f
    };
    Ok(RealDataSummary {
        feature_names: ds.feature_names.clone(),
        freq_original: freq(|r| &r.selected_original),
        freq_derandomized: freq(|r| &r.selected_derandomized),
        runs,
    })
}

/// Writes `(feature_name, freq_original, freq_derandomized)` rows.
pub fn write_frequencies_csv(summary: &RealDataSummary, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::FileUnreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    writer
        .write_record(["feature_name", "freq_original", "freq_derandomized"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for (j, name) in summary.feature_names.iter().enumerate() {
        writer
            .write_record([
                name.as_str(),
                &summary.freq_original[j].to_string(),
                &summary.freq_derandomized[j].to_string(),
            ])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the per-run selections as JSON.
pub fn write_runs_json(summary: &RealDataSummary, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(summary).expect("serializable summary");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}
