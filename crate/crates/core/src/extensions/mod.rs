//! Variants of the derandomized pipeline beyond the basic model-X case:
//! fixed-X designs, a robustness diagnostic for misspecified knockoff
//! distributions, multi-environment statistics, and side information
//! (weighted and adaptive e-values).

mod fixed_x;
mod multienv;
mod robustness;
mod side_info;

pub use fixed_x::derandomized_fixed_x;
pub use multienv::{
    derandomized_mekf, multienv_statistic_cst, multienv_statistic_pcst, EnvData, MekfMode,
    MultiEnvStatistics,
};
pub use robustness::{empirical_kl, KlDiagnostic};
pub use side_info::{
    adaptive_knockoff_evalues, derandomized_adaptive, derandomized_weighted, weighted_evalues,
    DefaultOrdering, OrderingRule, SideInfo, SideInfoKind,
};
