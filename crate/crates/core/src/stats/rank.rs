use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Alternative, Mode, StatsError, TestConfig, ZeroHandling};
use crate::Scalar;

/// Largest number of nonzero differences handled exactly in auto mode.
pub const EXACT_CUTOFF: usize = 20;

/// Largest `n` any exact computation accepts (`2^n` must fit in `u64`).
const EXACT_HARD_MAX: usize = 62;

/// Signed-rank statistic of a difference vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRank<S> {
    pub w_plus: S,
    pub w_minus: S,
    /// Number of nonzero differences.
    pub n_effective: usize,
    pub ties_present: bool,
    /// Zeros that took part in ranking (Pratt handling only).
    pub n_zero_ranked: usize,
    /// `Σ (t³ − t)` over tie groups among the nonzero differences.
    pub tie_term: S,
    /// Doubled ranks (`2 × midrank`) of the nonzero differences, ascending.
    pub doubled_ranks: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult<S> {
    pub n_effective: usize,
    pub w_plus: S,
    pub w_minus: S,
    pub p_value: S,
    /// `Exact` or `NormalApprox`; never `Auto`.
    pub mode_used: Mode,
    pub ties_present: bool,
    pub alternative: Alternative,
    /// The exact p-value as `count / 2^n` when computed by enumeration.
    #[serde(skip)]
    pub exact_p: Option<Ratio<u64>>,
}

/// Ranks `|d|` ascending with midranks for ties and sums them by sign.
pub fn signed_rank_statistic<S: Scalar>(diffs: &[S], zeros: ZeroHandling) -> Result<SignedRank<S>, StatsError> {
    if diffs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let pool: Vec<S> = match zeros {
        ZeroHandling::Drop => diffs.iter().copied().filter(|d| !d.is_zero()).collect(),
        ZeroHandling::Pratt => diffs.to_vec(),
    };
    let n_effective = diffs.iter().filter(|d| !d.is_zero()).count();
    if n_effective == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| pool[a].abs().partial_cmp(&pool[b].abs()).expect("finite"));

    let two = S::lit(2.0);
    let mut w_plus2 = 0u64;
    let mut w_minus2 = 0u64;
    let mut ties_present = false;
    let mut tie_term = S::zero();
    let mut doubled_ranks = Vec::with_capacity(n_effective);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let key = pool[order[i]].abs();
        while j + 1 < order.len() && pool[order[j + 1]].abs() == key {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share the midrank (i+j+2)/2.
        let r2 = (i + j + 2) as u64;
        let t = j - i + 1;
        if !key.is_zero() {
            if t > 1 {
                ties_present = true;
                let tf = S::from_usize_lossy(t);
                tie_term = tie_term + tf * tf * tf - tf;
            }
            for &k in &order[i..=j] {
                doubled_ranks.push(r2);
                if pool[k] > S::zero() {
                    w_plus2 += r2;
                } else {
                    w_minus2 += r2;
                }
            }
        }
        i = j + 1;
    }
    let n_zero_ranked = pool.len() - n_effective;
    Ok(SignedRank {
        w_plus: S::from_u64(w_plus2).expect("rank sum") / two,
        w_minus: S::from_u64(w_minus2).expect("rank sum") / two,
        n_effective,
        ties_present,
        n_zero_ranked,
        tie_term,
        doubled_ranks,
    })
}

/// Number of sign assignments for each doubled rank sum.
fn sum_counts(doubled_ranks: &[u64]) -> Vec<u64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

fn exact_tails(doubled_ranks: &[u64], w_plus2: u64, alt: Alternative) -> Ratio<u64> {
    let n = doubled_ranks.len();
    let denom = 1u64 << n;
    let counts = sum_counts(doubled_ranks);
    let w = (w_plus2 as usize).min(counts.len() - 1);
    let upper: u64 = counts[w..].iter().sum();
    let lower: u64 = counts[..=w].iter().sum();
    let count = match alt {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2 * upper.min(lower)).min(denom),
    };
    Ratio::new(count, denom)
}

/// Exact tail probability of `W+ = w` for tie-free ranks `1..=n`.
///
/// `greater` is `P(W+ ≥ w)`, `less` is `P(W+ ≤ w)`, two-sided doubles the
/// smaller tail and caps at 1.
pub fn wilcoxon_p_exact<S: Scalar>(w: S, n: usize, alt: Alternative) -> Result<Ratio<u64>, StatsError> {
    if n > EXACT_CUTOFF {
        return Err(StatsError::NTooLarge { n, max: EXACT_CUTOFF });
    }
    if n == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    if !w.is_finite() || w.fract() != S::zero() || w < S::zero() {
        return Err(StatsError::TiesPresent);
    }
    let ranks: Vec<u64> = (1..=n as u64).map(|r| 2 * r).collect();
    let max = (n * (n + 1) / 2) as f64;
    let w2 = (2.0 * w.as_f64().min(max)) as u64;
    Ok(exact_tails(&ranks, w2, alt))
}

/// Exact conditional tail probability for arbitrary (possibly tied) doubled ranks.
pub fn wilcoxon_p_exact_ranks(doubled_ranks: &[u64], w_plus2: u64, alt: Alternative) -> Result<Ratio<u64>, StatsError> {
    if doubled_ranks.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    if doubled_ranks.len() > EXACT_HARD_MAX {
        return Err(StatsError::NTooLarge {
            n: doubled_ranks.len(),
            max: EXACT_HARD_MAX,
        });
    }
    Ok(exact_tails(doubled_ranks, w_plus2, alt))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

fn approx_core(w: f64, mean: f64, var: f64, alt: Alternative) -> Result<f64, StatsError> {
    if !(var > 0.0) {
        return Err(StatsError::DegenerateVariance);
    }
    let sd = var.sqrt();
    let phi = std_normal();
    let p = match alt {
        Alternative::Greater => phi.sf((w - 0.5 - mean) / sd),
        Alternative::Less => phi.cdf((w + 0.5 - mean) / sd),
        Alternative::TwoSided => 2.0 * phi.sf(((w - mean).abs() - 0.5).max(0.0) / sd),
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Normal approximation with continuity correction.
///
/// Mean `n(n+1)/4`, variance `n(n+1)(2n+1)/24 − tie_term/48` where
/// `tie_term = Σ(t³ − t)` over tie groups.
pub fn wilcoxon_p_approx<S: Scalar>(w: S, n: usize, tie_term: S, alt: Alternative) -> Result<S, StatsError> {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term.as_f64() / 48.0;
    Ok(S::lit(approx_core(w.as_f64(), mean, var, alt)?))
}

fn ratio_to<S: Scalar>(r: Ratio<u64>) -> S {
    S::lit(*r.numer() as f64 / *r.denom() as f64)
}

/// Paired test on `a − b`.
pub fn wilcoxon_test<S: Scalar>(a: &[S], b: &[S], config: &TestConfig) -> Result<TestResult<S>, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewPairs { n: a.len(), min: 2 });
    }
    let diffs: Vec<S> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let sr = signed_rank_statistic(&diffs, config.zero_handling)?;
    let n = sr.n_effective;
    let pratt_zeros = config.zero_handling == ZeroHandling::Pratt && sr.n_zero_ranked > 0;
    let exact = match config.mode {
        Mode::Exact => !pratt_zeros,
        Mode::NormalApprox => false,
        Mode::Auto => !pratt_zeros && n <= EXACT_CUTOFF && !sr.ties_present,
    };
    let (p_value, exact_p, mode_used) = if exact {
        let w2 = (sr.w_plus.as_f64() * 2.0).round() as u64;
        let r = wilcoxon_p_exact_ranks(&sr.doubled_ranks, w2, config.alternative)?;
        (ratio_to(r), Some(r), Mode::Exact)
    } else if pratt_zeros {
        // Ranks 1..=z belong to the zeros and are removed from the null distribution.
        let total = (n + sr.n_zero_ranked) as f64;
        let z = sr.n_zero_ranked as f64;
        let mean = (total * (total + 1.0) - z * (z + 1.0)) / 4.0;
        let var = (total * (total + 1.0) * (2.0 * total + 1.0) - z * (z + 1.0) * (2.0 * z + 1.0)) / 24.0
            - sr.tie_term.as_f64() / 48.0;
        let p = approx_core(sr.w_plus.as_f64(), mean, var, config.alternative)?;
        (S::lit(p), None, Mode::NormalApprox)
    } else {
        let p = wilcoxon_p_approx(sr.w_plus, n, sr.tie_term, config.alternative)?;
        (p, None, Mode::NormalApprox)
    };
    Ok(TestResult {
        n_effective: n,
        w_plus: sr.w_plus,
        w_minus: sr.w_minus,
        p_value,
        mode_used,
        ties_present: sr.ties_present,
        alternative: config.alternative,
        exact_p,
    })
}
