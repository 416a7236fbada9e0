//! Multi-environment knockoffs: statistics computed separately in each
//! environment are collapsed into one importance vector per feature, either
//! for the consistency hypothesis (non-null in every environment) or the
//! partial-consistency hypothesis (non-null in at least `r` environments).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::filter::{derandomize, DerandomizeOptions, DerandomizedOutput};
use crate::knockoffs::GaussianModel;
use crate::numerics::{binom_cdf_pmf, Purpose, RngStream};
use crate::stats::{ImportanceStatistic, ImportanceVector};

/// Per-environment importance statistics `W`, one row per environment.
#[derive(Debug, Clone)]
pub struct MultiEnvStatistics {
    w: Array2<f64>,
}

impl MultiEnvStatistics {
    pub fn new(w: Array2<f64>) -> Result<Self> {
        if w.nrows() == 0 || w.ncols() == 0 {
            return Err(Error::EnvDimensionMismatch {
                context: "statistics matrix must have at least one row and column".into(),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "multi-environment statistics".into(),
            });
        }
        Ok(Self { w })
    }

    pub fn env_count(&self) -> usize {
        self.w.nrows()
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.w
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Consistency statistic: `W_j = min_e sign(W_j^e) * prod_e |W_j^e|`.
/// A zero in any environment zeroes the product, so `sign(0) = 0` is moot
/// for the value but keeps the sign factor well defined.
pub fn multienv_statistic_cst(stats: &MultiEnvStatistics) -> ImportanceVector {
    let w = stats.as_array();
    (0..stats.p())
        .map(|j| {
            let col = w.column(j);
            let min_sign = col.iter().map(|&v| sign(v)).fold(1.0_f64, f64::min);
            let product: f64 = col.iter().map(|&v| v.abs()).product();
            min_sign * product
        })
        .collect()
}

/// Partial-consistency statistic for level `r`:
///
/// `W_j = sign(1/2 - p_j) * prod_{e=1..r} |W_j|^{(E-e+1)}`,
///
/// where `|W_j|^{(k)}` is the `k`-th largest magnitude in column `j` (so the
/// product runs over the `r` smallest) and
///
/// `p_j = Psi(n_j^- - 1, (E-r+1-n_j^0) v 0, 1/2)
///      + U_j * psi(n_j^-, (E-r+1-n_j^0) v 0, 1/2)`
///
/// with `n_j^-`, `n_j^0` the negative and zero counts of the column, `Psi`
/// and `psi` the binomial CDF and mass, and `U_j` uniform from the stream
/// (consumed in ascending `j`).
pub fn multienv_statistic_pcst(
    stats: &MultiEnvStatistics,
    r: usize,
    stream: &mut RngStream,
) -> Result<ImportanceVector> {
    let env_count = stats.env_count();
    if r == 0 || r > env_count {
        return Err(Error::ConfigInvalid {
            reason: format!("pcst level r = {r} must lie in 1..={env_count}"),
        });
    }
    let w = stats.as_array();
    let mut out = Vec::with_capacity(stats.p());
    for j in 0..stats.p() {
        let col = w.column(j);
        let n_neg = col.iter().filter(|&&v| v < 0.0).count() as i64;
        let n_zero = col.iter().filter(|&&v| v == 0.0).count() as i64;
        let m = (env_count as i64 - r as i64 + 1 - n_zero).max(0) as u64;
        let (cdf_below, _) = binom_cdf_pmf(n_neg - 1, m, 0.5);
        let (_, mass_at) = binom_cdf_pmf(n_neg, m, 0.5);
        let p_j = cdf_below + stream.uniform() * mass_at;
        let mut mags: Vec<f64> = col.iter().map(|&v| v.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
        let product: f64 = mags[..r].iter().product();
        out.push(sign(0.5 - p_j) * product);
    }
    Ok(out)
}

/// How to collapse the per-environment statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MekfMode {
    /// Consistency: non-null in every environment.
    Cst,
    /// Partial consistency at level `r`: non-null in at least `r`
    /// environments.
    Pcst(usize),
}

/// One environment's data.
#[derive(Debug, Clone)]
pub struct EnvData {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

/// Derandomized multi-environment knockoff filter.
///
/// Each run samples knockoffs in every environment (stream `(master_seed,
/// run, env)`), computes the per-environment statistic, collapses the rows
/// via `mode`, and proceeds exactly as [`derandomize`]: threshold with
/// offset 1, e-values, fixed-order average, e-BH. With a single environment
/// in `Cst` mode the collapse is the identity, so the output matches
/// [`crate::filter::derandomized_knockoffs`] bit for bit.
pub fn derandomized_mekf(
    envs: &[EnvData],
    models: &[GaussianModel],
    statistic: &dyn ImportanceStatistic,
    mode: MekfMode,
    options: &DerandomizeOptions,
    master_seed: u64,
) -> Result<DerandomizedOutput> {
    if envs.is_empty() || envs.len() != models.len() {
        return Err(Error::EnvDimensionMismatch {
            context: format!("{} datasets for {} models", envs.len(), models.len()),
        });
    }
    let p = models[0].p();
    for (e, (env, model)) in envs.iter().zip(models).enumerate() {
        if model.p() != p || env.x.ncols() != p {
            return Err(Error::EnvDimensionMismatch {
                context: format!("environment {e} does not share p = {p}"),
            });
        }
        if env.x.nrows() != env.y.len() {
            return Err(Error::EnvDimensionMismatch {
                context: format!(
                    "environment {e}: {} rows vs {} responses",
                    env.x.nrows(),
                    env.y.len()
                ),
            });
        }
    }
    if let MekfMode::Pcst(r) = mode {
        if r == 0 || r > envs.len() {
            return Err(Error::ConfigInvalid {
                reason: format!("pcst level r = {r} must lie in 1..={}", envs.len()),
            });
        }
    }
    derandomize(p, options, |m| {
        let mut rows = Array2::<f64>::zeros((envs.len(), p));
        for (e, (env, model)) in envs.iter().zip(models).enumerate() {
            let mut kn =
                RngStream::for_purpose(master_seed, m as u64, e as u64, Purpose::Knockoff);
            let xt = model.sample_knockoffs(&env.x, &mut kn)?;
            let mut st =
                RngStream::for_purpose(master_seed, m as u64, e as u64, Purpose::Statistic);
            let w = statistic.compute(&env.x, &xt, &env.y, &mut st)?;
            for (j, v) in w.into_iter().enumerate() {
                rows[[e, j]] = v;
            }
        }
        let stats = MultiEnvStatistics::new(rows)?;
        match mode {
            MekfMode::Cst => Ok(multienv_statistic_cst(&stats)),
            MekfMode::Pcst(r) => {
                let mut u =
                    RngStream::for_purpose(master_seed, m as u64, 0, Purpose::Pcst);
                multienv_statistic_pcst(&stats, r, &mut u)
            }
        }
    })
}
