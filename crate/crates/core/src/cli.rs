//! Command-line interface: `simulate`, `select`, `diagnose`, `ingest-check`.
//!
//! Exit codes: 0 on success, 1 on runtime failure (I/O, numerics), 2 on
//! usage or configuration errors (bad flags, malformed configs, violated
//! mode preconditions). No subcommand mutates its inputs; artifacts go
//! under `--out` and echo enough of their configuration to be re-run.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use serde_json::json;

use crate::error::Error;
use crate::extensions::{
    derandomized_adaptive, derandomized_fixed_x, derandomized_mekf, derandomized_weighted,
    empirical_kl, DefaultOrdering, EnvData, MekfMode, SideInfo,
};
use crate::filter::{
    derandomized_knockoffs, knockoff_evalues, knockoff_filter, knockoff_threshold,
    sharpness_diagnostic, DerandomizeOptions, DerandomizedOutput,
};
use crate::harness::{
    ar1_covariance, generate_dataset, run_experiment, write_records_csv, write_summary_json,
    Covariance, ExperimentConfig,
};
use crate::ingest::{load_csv, load_csv_grouped, Dataset};
use crate::knockoffs::{
    exchangeability_diagnostic, second_order_model, FixedXDesign, GaussianModel,
};
use crate::numerics::{Purpose, RngStream, SpdMatrix};
use crate::stats::{lcd_statistic, Family, LcdStatistic};

#[derive(Parser)]
#[command(
    name = "eknock",
    version,
    about = "Derandomized knockoff variable selection with e-values"
)]
struct Cli {
    /// Cap the number of worker threads (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation study from a JSON config; writes summary.json and
    /// records.csv.
    Simulate {
        /// Experiment config (JSON; unknown keys are errors).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Select features from a data CSV; writes selection.json.
    Select(SelectArgs),
    /// Run a diagnostic on a simulated config; writes diagnose_<mode>.json.
    Diagnose(DiagnoseArgs),
    /// Load and clean a data CSV, printing the cleaning report.
    IngestCheck {
        /// Input CSV (header row, comma separated; NA or empty = missing).
        #[arg(long)]
        data: PathBuf,
        /// Name of the response column.
        #[arg(long)]
        response: String,
        /// Drop binary columns with fewer ones than this.
        #[arg(long, default_value_t = 3)]
        min_occurrence: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SelectMode {
    /// Model-X knockoffs with a second-order Gaussian model fit to X.
    Mx,
    /// Fixed-X knockoffs (requires n >= 2p and full column rank).
    FixedX,
    /// Multi-environment knockoff filter over an environment column.
    Multienv,
    /// Weighted e-values from side-information weights.
    Weighted,
    /// Adaptively screened e-values ordered by a side-information score.
    Adaptive,
}

#[derive(Args)]
struct SelectArgs {
    /// Input CSV (header row, comma separated; NA or empty = missing).
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    #[arg(long, value_enum, default_value_t = SelectMode::Mx)]
    mode: SelectMode,
    /// Per-run knockoff threshold level.
    #[arg(long, default_value_t = 0.05)]
    alpha_kn: f64,
    /// e-BH level; the FDR target of the final selection.
    #[arg(long, default_value_t = 0.1)]
    alpha_ebh: f64,
    /// Knockoff runs to average over.
    #[arg(long, default_value_t = 50)]
    m_runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Drop binary columns with fewer ones than this.
    #[arg(long, default_value_t = 3)]
    min_occurrence: usize,
    /// Single-run original knockoff filter at alpha_ebh (mx and fixed_x).
    #[arg(long)]
    classic: bool,
    /// Side-information CSV with columns feature_name,value
    /// (weighted and adaptive modes).
    #[arg(long)]
    side_info: Option<PathBuf>,
    /// Column holding the environment label (multienv mode).
    #[arg(long)]
    env_column: Option<String>,
    /// Partial-consistency level r for multienv; omitted means the fully
    /// consistent statistic.
    #[arg(long)]
    pcst_r: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum DiagnoseMode {
    /// Empirical KL divergence of a (possibly misspecified) sampler.
    Robustness,
    /// Distance of the averaged e-values from the e-BH selection floor.
    Sharpness,
    /// Moment checks of the sampled (X, knockoff) joint distribution.
    Exchangeability,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, value_enum)]
    mode: DiagnoseMode,
    /// Experiment config (JSON) the diagnostic simulates from.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Scale factor applied to the true covariance to form the sampler's
    /// covariance (robustness mode; 1.0 means a correctly specified model).
    #[arg(long, default_value_t = 1.0)]
    scale_cov: f64,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ConfigInvalid { .. }
            | Error::ResponseMissing { .. }
            | Error::OffsetTooSmall { .. }
            | Error::TooFewRows { .. }
            | Error::RankDeficientX { .. }
            | Error::NonPositiveWeight { .. }
            | Error::InvalidOrdering { .. }
            | Error::EnvDimensionMismatch { .. }
            | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses arguments from the process environment, runs the subcommand, and
/// returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { 2 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.clone();
    let workers = cli.workers;
    let body = move || -> Result<(), CliError> {
        match cli.command {
            Command::Simulate { config, seed } => cmd_simulate(&config, seed, &out),
            Command::Select(args) => cmd_select(&args, &out),
            Command::Diagnose(args) => cmd_diagnose(&args, &out),
            Command::IngestCheck {
                data,
                response,
                min_occurrence,
            } => cmd_ingest_check(&data, &response, min_occurrence),
        }
    };
    match workers {
        None => body(),
        Some(k) => {
            if k == 0 {
                return Err(CliError::usage("--workers must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError {
                    code: 1,
                    message: format!("cannot build worker pool: {e}"),
                })?;
            pool.install(body)
        }
    }
}

fn read_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError {
        code: 1,
        message: format!("cannot create {}: {e}", dir.display()),
    })?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    std::fs::write(&path, text + "\n").map_err(|e| CliError {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })?;
    Ok(path)
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = read_config(config, seed)?;
    let report = run_experiment(&cfg)?;
    std::fs::create_dir_all(out).map_err(|e| CliError {
        code: 1,
        message: format!("cannot create {}: {e}", out.display()),
    })?;
    let summary = out.join("summary.json");
    let records = out.join("records.csv");
    write_summary_json(&report, &summary)?;
    write_records_csv(&report, &records)?;
    let m = &report.metrics;
    println!(
        "simulate: {} datasets x {} reruns | fdr original {:.4} derandomized {:.4} | \
         power original {:.4} derandomized {:.4}",
        cfg.replicates,
        cfg.reruns,
        m.original.fdr,
        m.derandomized.fdr,
        m.original.power,
        m.derandomized.power,
    );
    println!("wrote {} and {}", summary.display(), records.display());
    Ok(())
}

/// Loads the side-information CSV (`feature_name,value`) and aligns it with
/// the cleaned feature list.
fn read_side_info(path: &Path, feature_names: &[String]) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut by_name: HashMap<String, f64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let name = record
            .get(0)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| CliError::usage(format!("{}: empty feature name", path.display())))?;
        let value: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| {
                CliError::usage(format!("{}: bad value for {name}", path.display()))
            })?;
        by_name.insert(name, value);
    }
    feature_names
        .iter()
        .map(|name| {
            by_name.get(name).copied().ok_or_else(|| {
                CliError::usage(format!(
                    "side info {} has no entry for feature {name}",
                    path.display()
                ))
            })
        })
        .collect()
}

/// One original knockoff-filter run, reported through its e-values so the
/// output shape matches the derandomized path.
fn classic_output(
    x: &ndarray::Array2<f64>,
    y: &Array1<f64>,
    model: Option<&GaussianModel>,
    design: Option<&FixedXDesign>,
    alpha_ebh: f64,
    seed: u64,
) -> Result<DerandomizedOutput, Error> {
    let mut kn = RngStream::for_purpose(seed, 1, 0, Purpose::Knockoff);
    let xt = match (model, design) {
        (Some(m), _) => m.sample_knockoffs(x, &mut kn)?,
        (_, Some(d)) => d.knockoffs(&mut kn)?,
        _ => unreachable!("classic mode requires a model or a design"),
    };
    let mut st = RngStream::for_purpose(seed, 1, 0, Purpose::Statistic);
    let w = lcd_statistic(x, &xt, y, Family::Gaussian, &mut st)?;
    let selection = knockoff_filter(&w, alpha_ebh);
    let thr = knockoff_threshold(&w, alpha_ebh, 1.0, false);
    let evalues = knockoff_evalues(&w, &thr, w.len())?;
    Ok(DerandomizedOutput {
        selection,
        evalues,
        per_run: None,
    })
}

fn cmd_select(args: &SelectArgs, out: &Path) -> Result<(), CliError> {
    if args.classic && !matches!(args.mode, SelectMode::Mx | SelectMode::FixedX) {
        return Err(CliError::usage(
            "--classic applies only to the mx and fixed_x modes",
        ));
    }
    let options = DerandomizeOptions {
        alpha_kn: args.alpha_kn,
        alpha_ebh: args.alpha_ebh,
        m_runs: args.m_runs,
        early_stop: true,
        keep_per_run: false,
    };
    let statistic = LcdStatistic::gaussian();
    let needs_side = matches!(args.mode, SelectMode::Weighted | SelectMode::Adaptive);
    let side_path = match (&args.side_info, needs_side) {
        (Some(p), true) => Some(p.as_path()),
        (None, true) => {
            return Err(CliError::usage(format!(
                "mode {} requires --side-info",
                mode_name(args.mode)
            )))
        }
        (Some(_), false) => {
            return Err(CliError::usage(
                "--side-info applies only to the weighted and adaptive modes",
            ))
        }
        (None, false) => None,
    };

    let (ds, output, mode_detail) = match args.mode {
        SelectMode::Multienv => {
            let env_column = args.env_column.as_deref().ok_or_else(|| {
                CliError::usage("mode multienv requires --env-column")
            })?;
            let groups =
                load_csv_grouped(&args.data, &args.response, env_column, args.min_occurrence)?;
            let mut envs = Vec::with_capacity(groups.len());
            let mut models = Vec::with_capacity(groups.len());
            let mut labels = Vec::with_capacity(groups.len());
            for (label, ds) in &groups {
                models.push(second_order_model(&ds.x)?);
                envs.push(EnvData {
                    x: ds.x.clone(),
                    y: ds.y.clone(),
                });
                labels.push(label.clone());
            }
            let mode = match args.pcst_r {
                None => MekfMode::Cst,
                Some(r) => MekfMode::Pcst(r),
            };
            let output = derandomized_mekf(&envs, &models, &statistic, mode, &options, args.seed)?;
            let detail = json!({
                "environments": labels,
                "statistic": match mode {
                    MekfMode::Cst => "cst".to_string(),
                    MekfMode::Pcst(r) => format!("pcst(r={r})"),
                },
            });
            let (_, ds) = groups.into_iter().next().expect("nonempty groups");
            (ds, output, detail)
        }
        _ => {
            if args.env_column.is_some() {
                return Err(CliError::usage(
                    "--env-column applies only to the multienv mode",
                ));
            }
            if args.pcst_r.is_some() {
                return Err(CliError::usage("--pcst-r applies only to the multienv mode"));
            }
            let ds = load_csv(&args.data, &args.response, args.min_occurrence)?;
            let side = side_path
                .map(|p| read_side_info(p, &ds.feature_names))
                .transpose()?;
            let output = match args.mode {
                SelectMode::Mx => {
                    let model = second_order_model(&ds.x)?;
                    if args.classic {
                        classic_output(&ds.x, &ds.y, Some(&model), None, args.alpha_ebh, args.seed)?
                    } else {
                        derandomized_knockoffs(
                            &ds.x, &ds.y, &model, &statistic, &options, args.seed,
                        )?
                    }
                }
                SelectMode::FixedX => {
                    let design = FixedXDesign::new(ds.x.clone())?;
                    if args.classic {
                        classic_output(
                            &ds.x,
                            &ds.y,
                            None,
                            Some(&design),
                            args.alpha_ebh,
                            args.seed,
                        )?
                    } else {
                        derandomized_fixed_x(&design, &ds.y, &statistic, &options, args.seed)?
                    }
                }
                SelectMode::Weighted => {
                    let side = SideInfo::weights(side.expect("side info required"))?;
                    let model = second_order_model(&ds.x)?;
                    derandomized_weighted(
                        &ds.x, &ds.y, &model, &statistic, &side, &options, args.seed,
                    )?
                }
                SelectMode::Adaptive => {
                    let side = SideInfo::covariates(side.expect("side info required"));
                    let model = second_order_model(&ds.x)?;
                    derandomized_adaptive(
                        &ds.x,
                        &ds.y,
                        &model,
                        &statistic,
                        &side,
                        &DefaultOrdering,
                        &options,
                        args.seed,
                    )?
                }
                SelectMode::Multienv => unreachable!("handled above"),
            };
            (ds, output, serde_json::Value::Null)
        }
    };

    let selected_features: Vec<&String> = output
        .selection
        .selected
        .iter()
        .map(|&j| &ds.feature_names[j])
        .collect();
    let value = json!({
        "mode": mode_name(args.mode),
        "classic": args.classic,
        "parameters": {
            "alpha_kn": args.alpha_kn,
            "alpha_ebh": args.alpha_ebh,
            "c": 1.0,
            "m_runs": if args.classic { 1 } else { args.m_runs },
            "seed": args.seed,
            "min_occurrence": args.min_occurrence,
        },
        "data": {
            "source": args.data.display().to_string(),
            "response": args.response,
            "n": ds.x.nrows(),
            "p": ds.x.ncols(),
            "cleaning_log": ds.provenance.log,
        },
        "detail": mode_detail,
        "selected_features": selected_features,
        "selected_indices": output.selection.selected,
        "k_hat": output.selection.k_hat,
        "evalue_cutoff": output.selection.cutoff,
        "evalues": output.evalues.as_slice(),
    });
    let path = write_json(out, "selection.json", &value)?;
    println!(
        "select[{}]: {} of {} features selected at alpha_ebh {}",
        mode_name(args.mode),
        output.selection.selected.len(),
        ds.x.ncols(),
        args.alpha_ebh,
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn mode_name(mode: SelectMode) -> &'static str {
    match mode {
        SelectMode::Mx => "mx",
        SelectMode::FixedX => "fixed_x",
        SelectMode::Multienv => "multienv",
        SelectMode::Weighted => "weighted",
        SelectMode::Adaptive => "adaptive",
    }
}

fn cmd_diagnose(args: &DiagnoseArgs, out: &Path) -> Result<(), CliError> {
    let cfg = read_config(&args.config, args.seed)?;
    if !(args.scale_cov.is_finite() && args.scale_cov > 0.0) {
        return Err(CliError::usage("--scale-cov must be positive"));
    }
    let Covariance::Ar1(rho) = cfg.covariance;
    let sigma = ar1_covariance(cfg.p, rho);
    let mean = Array1::zeros(cfg.p);
    let model_true =
        GaussianModel::equicorrelated(mean.clone(), SpdMatrix::new(sigma.clone())?)?;
    let mut data_stream = RngStream::for_purpose(cfg.master_seed, 1, 0, Purpose::Dataset);
    let (x, y, _truth) = generate_dataset(&cfg, &mut data_stream)?;
    let config_echo = serde_json::to_value(&cfg).expect("serializable config");

    let (name, value) = match args.mode {
        DiagnoseMode::Robustness => {
            let model_used = GaussianModel::equicorrelated(
                mean,
                SpdMatrix::new(sigma.mapv(|v| v * args.scale_cov))?,
            )?;
            let xts: Vec<_> = (1..=cfg.m_runs)
                .map(|m| {
                    let mut kn =
                        RngStream::for_purpose(cfg.master_seed, m as u64, 0, Purpose::Knockoff);
                    model_used.sample_knockoffs(&x, &mut kn)
                })
                .collect::<Result<_, _>>()?;
            let diag = empirical_kl(&model_true, &model_used, &x, &xts)?;
            let overall = diag.kl_max.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (
                "diagnose_robustness.json",
                json!({
                    "mode": "robustness",
                    "config": config_echo,
                    "scale_cov": args.scale_cov,
                    "runs": cfg.m_runs,
                    "kl_max_per_run": diag.kl_max,
                    "kl_max_overall": overall,
                    "kl": diag.kl,
                }),
            )
        }
        DiagnoseMode::Sharpness => {
            let options = DerandomizeOptions {
                alpha_kn: cfg.alpha_kn,
                alpha_ebh: cfg.alpha_ebh,
                m_runs: cfg.m_runs,
                early_stop: true,
                keep_per_run: false,
            };
            let statistic = match cfg.model_family {
                Family::Gaussian => LcdStatistic::gaussian(),
                Family::Logistic => LcdStatistic::logistic(),
            };
            let output = derandomized_knockoffs(
                &x,
                &y,
                &model_true,
                &statistic,
                &options,
                cfg.master_seed,
            )?;
            let report = sharpness_diagnostic(&output.evalues, &output.selection, cfg.alpha_ebh);
            let value = match report {
                None => json!({
                    "mode": "sharpness",
                    "config": config_echo,
                    "selected": 0,
                    "note": "empty selection; no floor to compare against",
                }),
                Some(r) => {
                    let selected_ratios: Vec<f64> = output
                        .selection
                        .selected
                        .iter()
                        .map(|&j| output.evalues.as_slice()[j] / r.floor)
                        .collect();
                    let min_selected =
                        selected_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                    json!({
                        "mode": "sharpness",
                        "config": config_echo,
                        "selected": output.selection.selected.len(),
                        "floor": r.floor,
                        "min_selected_ratio": min_selected,
                        "ratios": r.ratios,
                    })
                }
            };
            ("diagnose_sharpness.json", value)
        }
        DiagnoseMode::Exchangeability => {
            let mut kn = RngStream::for_purpose(cfg.master_seed, 1, 0, Purpose::Knockoff);
            let xt = model_true.sample_knockoffs(&x, &mut kn)?;
            let band = 4.0;
            let reports: Vec<serde_json::Value> = (0..cfg.p)
                .map(|j| {
                    let r = exchangeability_diagnostic(&x, &xt, j);
                    json!({
                        "feature": r.feature,
                        "mean_gap": r.mean_gap,
                        "var_gap": r.var_gap,
                        "max_cross_cov_gap": r.max_cross_cov_gap,
                        "max_knock_cov_gap": r.max_knock_cov_gap,
                        "mc_scale": r.mc_scale,
                        "flagged": r.flagged(band),
                    })
                })
                .collect();
            let flagged = reports
                .iter()
                .filter(|r| r["flagged"].as_bool().unwrap_or(false))
                .count();
            (
                "diagnose_exchangeability.json",
                json!({
                    "mode": "exchangeability",
                    "config": config_echo,
                    "band": band,
                    "flagged_features": flagged,
                    "features": reports,
                }),
            )
        }
    };
    let path = write_json(out, name, &value)?;
    println!("diagnose[{name}]: wrote {}", path.display());
    Ok(())
}

fn cmd_ingest_check(data: &Path, response: &str, min_occurrence: usize) -> Result<(), CliError> {
    let ds: Dataset = load_csv(data, response, min_occurrence)?;
    let n = ds.x.nrows() as f64;
    let mut max_mean = 0.0_f64;
    let mut max_var_gap = 0.0_f64;
    for col in ds.x.columns() {
        let mean = col.sum() / n;
        let var = col.dot(&col) / n - mean * mean;
        max_mean = max_mean.max(mean.abs());
        max_var_gap = max_var_gap.max((var - 1.0).abs());
    }
    println!("source: {}", ds.provenance.source);
    println!(
        "kept {} rows, {} feature columns (response {:?})",
        ds.x.nrows(),
        ds.x.ncols(),
        response
    );
    for line in &ds.provenance.log {
        println!("  {line}");
    }
    println!("max |column mean| = {max_mean:.2e}, max |variance - 1| = {max_var_gap:.2e}");
    Ok(())
}
