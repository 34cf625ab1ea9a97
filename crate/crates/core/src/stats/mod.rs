//! Normality gate, rank-sum tests, box-plot outlier rules and the
//! item-by-administration p-value table.

mod normal;
mod outliers;
mod shapiro;
mod table;
mod wilcoxon;

use core::fmt;

use serde::{Deserialize, Serialize};

pub use normal::{normal_cdf, normal_quantile, normal_sf};
pub use outliers::{iqr_outliers, tukey_hinges, BoxStats, OutlierLabeling, OutlierTag};
pub use shapiro::shapiro_wilk;
pub use table::{build_pvalue_table, compare_groups, CellFlag, CellSamples, PValueCell, PValueTable};
pub use wilcoxon::{
    exact_rank_sum_distribution, midranks, wilcoxon_rank_sum, Alternative, WilcoxonMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapiroWilk,
    WilcoxonRankSumExact,
    WilcoxonRankSumNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub two_sided: bool,
    pub n1: usize,
    /// Zero for one-sample tests.
    pub n2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsError {
    TooFewObservations { needed: usize, got: usize },
    TooManyObservations { limit: usize, got: usize },
    ZeroVariance,
    NonFinite,
    /// Exact enumeration requested beyond the configured size cap.
    ExactTooLarge { n: usize, cap: usize },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::TooFewObservations { needed, got } => {
                write!(f, "need at least {needed} observations, got {got}")
            }
            StatsError::TooManyObservations { limit, got } => {
                write!(f, "at most {limit} observations supported, got {got}")
            }
            StatsError::ZeroVariance => f.write_str("sample has zero variance"),
            StatsError::NonFinite => f.write_str("sample contains non-finite values"),
            StatsError::ExactTooLarge { n, cap } => write!(
                f,
                "exact test limited to {cap} total observations (got {n}); use normal mode"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub alpha: f64,
    /// Largest pooled sample size for which the exact test is used.
    pub exact_cap: usize,
    pub alternative: Alternative,
    /// Drop mild and extreme outliers before comparing time-to-intervene.
    pub exclude_outliers: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            exact_cap: 20,
            alternative: Alternative::TwoSided,
            exclude_outliers: false,
        }
    }
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

#[cfg(test)]
mod tests;
