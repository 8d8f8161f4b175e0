//! Rank statistics for comparing partners: the Wilcoxon rank-sum test and
//! Spearman's rank correlation, plus the pairwise ranking table.

mod ranks;
mod spearman;
mod table;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ranks::midranks;
pub use spearman::{spearman_rho, Correlation};
pub use table::{ranking_tables, RankingRecord, RankingRow, RankingTable};
pub use wilcoxon::{encode_split, wilcoxon_exact, wilcoxon_normal, wilcoxon_rank_sum, EXACT_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("a sample has zero variance; the correlation is undefined")]
    ZeroVariance,
    #[error("exact enumeration over {0} values is too large")]
    TooLargeForExact(usize),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("malformed log: {0}")]
    MalformedLog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactPermutation,
    NormalApproxTieCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
}
