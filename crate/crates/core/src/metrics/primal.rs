use serde::{Deserialize, Serialize};

use super::{gap, MetricsError};
use crate::orchestrator::Trace;
use crate::scalar::order_free_mean;
use crate::Scalar;

/// Lower bound of the primal-gap denominator.
pub const PRIMAL_GAP_EPS: f64 = 1e-9;

/// Percentage used for a trace that has no incumbent yet in convergence profiles.
pub const DEFAULT_GAP_CAP: f64 = 100.0;

/// Right-continuous step function of the primal gap over time.
///
/// Before the first incumbent the gap is 1; from an incumbent `c` onwards it is
/// `|c - bks| / max(|c|, |bks|, 1e-9)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalGapFunction<S> {
    /// `(t, gamma)` at every change point, strictly increasing in `t`.
    steps: Vec<(S, S)>,
}

impl<S: Scalar> PrimalGapFunction<S> {
    /// Builds the function from raw `(t, cost)` observations.
    ///
    /// The observations are sorted by time and reduced to the running
    /// minimum, so non-improving entries have no effect.
    pub fn from_incumbents(observations: &[(S, S)], bks: S) -> Result<Self, MetricsError> {
        if !(bks > S::zero() && bks.is_finite()) {
            return Err(MetricsError::NonpositiveBks(bks.as_f64()));
        }
        let mut obs = observations.to_vec();
        obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let eps = S::lit(PRIMAL_GAP_EPS);
        let mut steps: Vec<(S, S)> = Vec::new();
        let mut best = S::infinity();
        for (t, c) in obs {
            if !(t.is_finite() && c.is_finite()) {
                return Err(MetricsError::InvalidValue(if t.is_finite() { c.as_f64() } else { t.as_f64() }));
            }
            if c >= best {
                continue;
            }
            best = c;
            let gamma = (c - bks).abs() / c.abs().max(bks.abs()).max(eps);
            match steps.last_mut() {
                Some(last) if last.0 == t => last.1 = gamma,
                _ => steps.push((t, gamma)),
            }
        }
        Ok(PrimalGapFunction { steps })
    }

    pub fn steps(&self) -> &[(S, S)] {
        &self.steps
    }

    pub fn eval(&self, t: S) -> S {
        let idx = self.steps.partition_point(|s| s.0 <= t);
        idx.checked_sub(1).map_or(S::one(), |i| self.steps[i].1)
    }

    /// Exact integral over `[0, horizon]`.
    pub fn integral(&self, horizon: S) -> Result<S, MetricsError> {
        if !(horizon > S::zero() && horizon.is_finite()) {
            return Err(MetricsError::NonpositiveHorizon(horizon.as_f64()));
        }
        let mut total = S::zero();
        let mut t_prev = S::zero();
        let mut g_prev = S::one();
        for &(t, g) in &self.steps {
            let t = t.max(S::zero());
            if t >= horizon {
                break;
            }
            if t > t_prev {
                total = total + g_prev * (t - t_prev);
                t_prev = t;
            }
            g_prev = g;
        }
        Ok(total + g_prev * (horizon - t_prev))
    }
}

pub fn primal_gap_fn<S: Scalar>(trace: &Trace<S>, bks: S) -> Result<PrimalGapFunction<S>, MetricsError> {
    let obs: Vec<(S, S)> = trace.events().iter().map(|e| (e.t, e.cost)).collect();
    PrimalGapFunction::from_incumbents(&obs, bks)
}

pub fn primal_integral<S: Scalar>(trace: &Trace<S>, bks: S, horizon: S) -> Result<S, MetricsError> {
    primal_gap_fn(trace, bks)?.integral(horizon)
}

/// Time of the last (best) incumbent.
pub fn time_to_best<S: Scalar>(trace: &Trace<S>) -> Result<S, MetricsError> {
    trace.events().last().map(|e| e.t).ok_or(MetricsError::EmptyTrace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMetrics<S> {
    pub primal_integral: S,
    /// Time of the last incumbent found within the horizon; the horizon
    /// itself when none was.
    pub time_to_best: S,
    pub horizon: S,
}

pub fn trace_metrics<S: Scalar>(trace: &Trace<S>, bks: S, horizon: S) -> Result<TraceMetrics<S>, MetricsError> {
    let primal_integral = primal_integral(trace, bks, horizon)?;
    let time_to_best = trace
        .events()
        .iter()
        .rev()
        .find(|e| e.t <= horizon)
        .map_or(horizon, |e| e.t);
    Ok(TraceMetrics {
        primal_integral,
        time_to_best,
        horizon,
    })
}

/// `points` log-spaced values from `start` to `end`, both included.
pub fn log_grid<S: Scalar>(start: S, end: S, points: usize) -> Result<Vec<S>, MetricsError> {
    if points == 0 {
        return Err(MetricsError::EmptyGrid);
    }
    if !(start > S::zero() && end >= start && end.is_finite()) {
        return Err(MetricsError::GridNotIncreasing);
    }
    if points == 1 || start == end {
        return Ok(vec![end]);
    }
    let (ls, le) = (start.ln(), end.ln());
    let step = (le - ls) / S::from_usize_lossy(points - 1);
    let mut grid: Vec<S> = (0..points)
        .map(|i| if i + 1 == points { end } else { (ls + step * S::from_usize_lossy(i)).exp() })
        .collect();
    grid[0] = start;
    grid.dedup();
    Ok(grid)
}

/// 100 log-spaced points from the first incumbent (at least `horizon × 1e-4`) to `horizon`.
pub fn default_grid<S: Scalar>(traces: &[&Trace<S>], horizon: S) -> Result<Vec<S>, MetricsError> {
    if !(horizon > S::zero()) {
        return Err(MetricsError::NonpositiveHorizon(horizon.as_f64()));
    }
    let first = traces
        .iter()
        .filter_map(|t| t.events().first().map(|e| e.t))
        .fold(S::infinity(), S::min);
    let floor = horizon * S::lit(1e-4);
    let start = if first.is_finite() { first.max(floor).min(horizon) } else { floor };
    log_grid(start, horizon, 100)
}

/// Mean percentage gap across traces at each grid point, with the default cap.
pub fn convergence_profile<S: Scalar>(traces: &[(&Trace<S>, S)], grid: &[S]) -> Result<Vec<(S, S)>, MetricsError> {
    convergence_profile_capped(traces, grid, S::lit(DEFAULT_GAP_CAP))
}

/// As [`convergence_profile`]; a trace without an incumbent contributes `cap`.
pub fn convergence_profile_capped<S: Scalar>(
    traces: &[(&Trace<S>, S)],
    grid: &[S],
    cap: S,
) -> Result<Vec<(S, S)>, MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    if traces.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(MetricsError::GridNotIncreasing);
    }
    for &(_, bks) in traces {
        gap(S::zero(), bks)?;
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut gaps = Vec::with_capacity(traces.len());
    for &t in grid {
        gaps.clear();
        for &(trace, bks) in traces {
            gaps.push(match trace.incumbent_at(t) {
                Some(c) => gap(c, bks)?,
                None => cap,
            });
        }
        out.push((t, order_free_mean(&gaps)));
    }
    Ok(out)
}
