//! Experiment configuration, serializable so experiments can be described
//! as JSON files and rerun exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Family;

/// Feature covariance family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariance {
    /// `Sigma_jk = rho^|j-k|`.
    Ar1(f64),
}

/// Full description of one simulation experiment. An experiment draws
/// `replicates` datasets; on each dataset both methods are rerun `reruns`
/// times with fresh knockoff randomness. Everything downstream is a pure
/// function of this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub model_family: Family,
    /// Mean of the signal amplitude distribution `N(amplitude, 1)`.
    pub amplitude: f64,
    /// Zeros between consecutive non-null coefficients.
    pub spacing: usize,
    pub nonnull_count: usize,
    pub covariance: Covariance,
    pub alpha_kn: f64,
    pub alpha_ebh: f64,
    /// Threshold offset; 1 is the value the e-value guarantee needs.
    #[serde(rename = "c")]
    pub offset_c: f64,
    /// Knockoff runs per derandomized selection.
    pub m_runs: usize,
    /// Dataset draws (`D`).
    pub replicates: usize,
    /// Method reruns per dataset (`K`).
    pub reruns: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::ConfigInvalid { reason });
        if self.n < 2 || self.p == 0 {
            return fail(format!("n = {}, p = {} are too small", self.n, self.p));
        }
        if self.nonnull_count == 0 {
            return fail("nonnull_count must be positive".into());
        }
        if self.nonnull_count * (self.spacing + 1) > self.p {
            return fail(format!(
                "{} non-nulls at spacing {} need {} features, p = {}",
                self.nonnull_count,
                self.spacing,
                self.nonnull_count * (self.spacing + 1),
                self.p
            ));
        }
        for (name, alpha) in [("alpha_kn", self.alpha_kn), ("alpha_ebh", self.alpha_ebh)] {
            if !(alpha > 0.0 && alpha < 1.0) {
                return fail(format!("{name} = {alpha} must lie in (0, 1)"));
            }
        }
        if self.offset_c < 1.0 {
            return fail(format!(
                "c = {} breaks the e-value guarantee; use c >= 1",
                self.offset_c
            ));
        }
        if self.m_runs == 0 || self.replicates == 0 || self.reruns == 0 {
            return fail("m_runs, replicates, and reruns must be positive".into());
        }
        if !self.amplitude.is_finite() {
            return fail("amplitude must be finite".into());
        }
        let Covariance::Ar1(rho) = self.covariance;
        if !(rho > -1.0 && rho < 1.0) {
            return fail(format!("AR(1) rho = {rho} must lie in (-1, 1)"));
        }
        Ok(())
    }
}
