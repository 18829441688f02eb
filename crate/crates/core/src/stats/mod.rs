//! Wilcoxon signed-rank tests and the two-stage comparison protocol.
//!
//! Exact p-values come from the permutation distribution of the signed-rank
//! statistic: all `2^n` sign assignments are equally likely under the null
//! hypothesis, and the tail counts are obtained by dynamic programming over
//! rank sums. Ranks are handled doubled (`2 × midrank`), so the distribution
//! stays integral when ties produce half ranks.

mod input;
mod protocol;
mod rank;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use input::{read_paired_gaps, PairedGap};
pub use protocol::{bonferroni, compare_protocol, compare_protocol_with, decide, Decision, Outcome};
pub use rank::{
    signed_rank_statistic, wilcoxon_p_approx, wilcoxon_p_exact, wilcoxon_p_exact_ranks, wilcoxon_test, SignedRank,
    TestResult, EXACT_CUTOFF,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("exact mode supports at most {max} nonzero differences, got {n}")]
    NTooLarge { n: usize, max: usize },
    #[error("exact mode on (w, n) requires tie-free ranks")]
    TiesPresent,
    #[error("variance of the statistic is zero")]
    DegenerateVariance,
    #[error("paired samples differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {min} pairs, got {n}")]
    TooFewPairs { n: usize, min: usize },
    #[error("invalid significance level {0}")]
    InvalidLevel(f64),
    #[error("number of comparisons must be at least 1")]
    InvalidCount,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("empty input")]
    EmptyInput,
    #[error("input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// Differences tend to be negative.
    Less,
    /// Differences tend to be positive.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroHandling {
    /// Zero differences are discarded before ranking.
    #[default]
    Drop,
    /// Zeros take part in ranking and their ranks are then discarded.
    Pratt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    NormalApprox,
    /// Exact when at most [`EXACT_CUTOFF`] nonzero differences and no ties.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha0: f64,
    pub n_comparisons: usize,
    pub alternative: Alternative,
    pub zero_handling: ZeroHandling,
    pub mode: Mode,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha0: 0.025,
            n_comparisons: 2,
            alternative: Alternative::TwoSided,
            zero_handling: ZeroHandling::Drop,
            mode: Mode::Auto,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(StatsError::InvalidLevel(self.alpha0));
        }
        if self.n_comparisons == 0 {
            return Err(StatsError::InvalidCount);
        }
        Ok(())
    }
}
