//! Solution quality and time metrics.

mod boxplot;
mod cpu;
mod primal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxplot::{boxplot_stats, BoxplotStats};
pub use cpu::{normalize_time, scaling_factor, CpuRatingTable};
pub use primal::{
    convergence_profile, convergence_profile_capped, default_grid, log_grid, primal_gap_fn, primal_integral,
    time_to_best, trace_metrics, PrimalGapFunction, TraceMetrics, DEFAULT_GAP_CAP, PRIMAL_GAP_EPS,
};

use crate::orchestrator::RunRecord;
use crate::scalar::order_free_mean;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("BKS must be positive, got {0}")]
    NonpositiveBks(f64),
    #[error("horizon must be positive, got {0}")]
    NonpositiveHorizon(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("records mix solver/instance keys: {0}")]
    MixedKeys(String),
    #[error("unknown CPU {0:?}")]
    UnknownCpu(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("empty time grid")]
    EmptyGrid,
    #[error("time grid must be strictly increasing")]
    GridNotIncreasing,
    #[error("invalid value {0}")]
    InvalidValue(f64),
    #[error("no BKS for instance {0:?}")]
    MissingBks(String),
    #[error("ratings: {0}")]
    Ratings(String),
}

/// Percentage gap `100 (value - bks) / bks`. Negative when `value` beats the BKS.
pub fn gap<S: Scalar>(value: S, bks: S) -> Result<S, MetricsError> {
    if !(bks > S::zero() && bks.is_finite()) {
        return Err(MetricsError::NonpositiveBks(bks.as_f64()));
    }
    Ok(S::lit(100.0) * (value - bks) / bks)
}

/// Summary of repeated runs of one solver on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub solver: String,
    pub instance: String,
    pub n_runs: usize,
    pub avg_cost: f64,
    pub best_cost: f64,
    pub worst_cost: f64,
    /// Gap of `avg_cost`.
    pub avg_gap: f64,
    pub best_gap: f64,
    pub worst_gap: f64,
    /// Mean of the per-run gaps; equals `avg_gap` up to rounding.
    pub mean_run_gap: f64,
    /// Mean wall time in seconds, expressed on the base CPU when a ratings table is given.
    pub avg_normalized_time: f64,
}

/// Aggregates runs of one (solver, instance) pair.
///
/// Runs without a final cost (crashes before any incumbent) are left out and
/// do not count towards `n_runs`.
pub fn aggregate_runs(
    records: &[RunRecord],
    bks: f64,
    ratings: Option<&CpuRatingTable>,
) -> Result<RunStats, MetricsError> {
    let first = records.first().ok_or(MetricsError::EmptyInput)?;
    if let Some(r) = records.iter().find(|r| r.solver != first.solver || r.instance != first.instance) {
        return Err(MetricsError::MixedKeys(format!(
            "({}, {}) vs ({}, {})",
            first.solver, first.instance, r.solver, r.instance
        )));
    }
    gap(0.0, bks)?;
    let mut costs = Vec::with_capacity(records.len());
    let mut times = Vec::with_capacity(records.len());
    for r in records {
        let Some(c) = r.final_cost else { continue };
        costs.push(c);
        times.push(match ratings {
            Some(table) => table.normalize_time(r.wall_time, &r.cpu_name)?,
            None => r.wall_time,
        });
    }
    if costs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let avg_cost = order_free_mean(&costs);
    let best_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_cost = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let run_gaps: Vec<f64> = costs.iter().map(|&c| gap(c, bks)).collect::<Result<_, _>>()?;
    Ok(RunStats {
        solver: first.solver.clone(),
        instance: first.instance.clone(),
        n_runs: costs.len(),
        avg_cost: avg_cost.clamp(best_cost, worst_cost),
        best_cost,
        worst_cost,
        avg_gap: gap(avg_cost.clamp(best_cost, worst_cost), bks)?,
        best_gap: gap(best_cost, bks)?,
        worst_gap: gap(worst_cost, bks)?,
        mean_run_gap: order_free_mean(&run_gaps),
        avg_normalized_time: order_free_mean(&times),
    })
}

/// Groups records by (solver, instance) and aggregates each group.
///
/// Groups whose instance has no BKS in `bks_of` are skipped and reported.
pub fn aggregate_all(
    records: &[RunRecord],
    bks_of: impl Fn(&str) -> Option<f64>,
    ratings: Option<&CpuRatingTable>,
) -> (Vec<RunStats>, Vec<(String, MetricsError)>) {
    let mut groups: std::collections::BTreeMap<(&str, &str), Vec<RunRecord>> = Default::default();
    for r in records {
        groups.entry((&r.solver, &r.instance)).or_default().push(r.clone());
    }
    let mut stats = Vec::new();
    let mut problems = Vec::new();
    for ((solver, instance), group) in groups {
        let label = format!("{solver}/{instance}");
        let Some(bks) = bks_of(instance) else {
            problems.push((label, MetricsError::MissingBks(instance.to_string())));
            continue;
        };
        match aggregate_runs(&group, bks, ratings) {
            Ok(s) => stats.push(s),
            Err(e) => problems.push((label, e)),
        }
    }
    (stats, problems)
}
