use std::fmt;

use serde::{Deserialize, Serialize};

use super::{wilcoxon_test, Alternative, StatsError, TestConfig};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Equivalent,
    ABetter,
    AWorse,
    DifferentUndirected,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Equivalent => "equivalent",
            Outcome::ABetter => "a-better",
            Outcome::AWorse => "a-worse",
            Outcome::DifferentUndirected => "different-undirected",
        })
    }
}

/// Result of the two-stage protocol.
///
/// `p_h0` is the two-sided p-value, `p_h1` the one-sided p-value for "a is
/// lower than b", `p_opposite` the one-sided p-value for "a is higher".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision<S> {
    pub p_h0: S,
    pub p_h1: S,
    pub p_opposite: S,
    pub alpha_adjusted: S,
    pub outcome: Outcome,
}

/// Bonferroni-adjusted level `alpha0 / n`.
pub fn bonferroni<S: Scalar>(alpha0: S, n: usize) -> Result<S, StatsError> {
    if !(alpha0 > S::zero() && alpha0 < S::one()) {
        return Err(StatsError::InvalidLevel(alpha0.as_f64()));
    }
    if n == 0 {
        return Err(StatsError::InvalidCount);
    }
    Ok(alpha0 / S::from_usize_lossy(n))
}

/// Applies the decision rule to given p-values.
///
/// Equivalent when `p_h0 ≥ alpha`; otherwise a-better when `p_h1 < alpha`,
/// a-worse when the opposite one-sided p is below `alpha`, and
/// different-undirected if neither. Without `p_opposite` it is taken as
/// `1 − p_h1`.
pub fn decide<S: Scalar>(p_h0: S, p_h1: S, p_opposite: Option<S>, alpha: S) -> Decision<S> {
    let p_opposite = p_opposite.unwrap_or(S::one() - p_h1);
    let outcome = if p_h0 >= alpha {
        Outcome::Equivalent
    } else if p_h1 < alpha {
        Outcome::ABetter
    } else if p_opposite < alpha {
        Outcome::AWorse
    } else {
        Outcome::DifferentUndirected
    };
    Decision {
        p_h0,
        p_h1,
        p_opposite,
        alpha_adjusted: alpha,
        outcome,
    }
}

/// Compares per-instance values of `a` and `b` (lower is better).
pub fn compare_protocol<S: Scalar>(a: &[S], b: &[S], alpha0: S, n_comparisons: usize) -> Result<Decision<S>, StatsError> {
    let config = TestConfig {
        alpha0: alpha0.as_f64(),
        n_comparisons,
        ..TestConfig::default()
    };
    compare_protocol_with(a, b, &config)
}

/// As [`compare_protocol`] with explicit zero handling and mode.
///
/// Identical vectors are reported as equivalent with all p-values 1.
pub fn compare_protocol_with<S: Scalar>(a: &[S], b: &[S], config: &TestConfig) -> Result<Decision<S>, StatsError> {
    config.validate()?;
    let alpha = bonferroni(S::lit(config.alpha0), config.n_comparisons)?;
    let run = |alternative| wilcoxon_test(a, b, &TestConfig { alternative, ..*config });
    let two = match run(Alternative::TwoSided) {
        Ok(r) => r,
        Err(StatsError::AllZeroDifferences) => return Ok(decide(S::one(), S::one(), Some(S::one()), alpha)),
        Err(e) => return Err(e),
    };
    let less = run(Alternative::Less)?;
    let greater = run(Alternative::Greater)?;
    Ok(decide(two.p_value, less.p_value, Some(greater.p_value), alpha))
}
