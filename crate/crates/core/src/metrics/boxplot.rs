use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::Scalar;

/// Tukey five-number summary with outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats<S> {
    pub lower_whisker: S,
    pub q1: S,
    pub median: S,
    pub q3: S,
    pub upper_whisker: S,
    /// Values beyond 1.5 IQR from the hinges, ascending.
    pub outliers: Vec<S>,
    pub n: usize,
}

fn median_sorted<S: Scalar>(v: &[S]) -> S {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / S::lit(2.0)
    }
}

/// Hinges are medians of the lower and upper halves, each including the
/// median when the count is odd.
pub fn boxplot_stats<S: Scalar>(values: &[S]) -> Result<BoxplotStats<S>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(MetricsError::InvalidValue(v.as_f64()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    let half = n.div_ceil(2);
    let q1 = median_sorted(&v[..half]);
    let q3 = median_sorted(&v[n - half..]);
    let iqr = q3 - q1;
    let lo_fence = q1 - S::lit(1.5) * iqr;
    let hi_fence = q3 + S::lit(1.5) * iqr;
    let inside: Vec<S> = v.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence).collect();
    let outliers = v.iter().copied().filter(|&x| x < lo_fence || x > hi_fence).collect();
    Ok(BoxplotStats {
        lower_whisker: inside[0],
        q1,
        median: median_sorted(&v),
        q3,
        upper_whisker: inside[inside.len() - 1],
        outliers,
        n,
    })
}
