//! Benchmarking harness for Capacitated Vehicle Routing Problem solvers.
//!
//! The crate covers the whole pipeline of a computational study:
//!
//! * [`instance`]: TSPLIB-style instances, solutions, validation, best known
//!   solution registry and a caching downloader.
//! * [`gen`]: seeded instance generation.
//! * [`orchestrator`]: solver adapters, incumbent traces, durable result
//!   storage, and a built-in reference heuristic.
//! * [`metrics`]: gaps, CPU time normalization, primal integral, convergence
//!   profiles, boxplot summaries.
//! * [`stats`]: Wilcoxon signed-rank tests with Bonferroni correction.
//! * [`report`]: results tables, Pareto fronts and SVG charts.
//!
//! Numeric analysis code is generic over [`Scalar`] (`f32`/`f64`); the aliases
//! at the crate root fix it to `f64`. Exact Wilcoxon p-values are rationals
//! ([`ExactPValue`]).

pub mod gen;
pub mod instance;
pub mod metrics;
pub mod orchestrator;
pub mod report;
mod scalar;
pub mod stats;

pub use scalar::Scalar;

pub use instance::{BksRegistry, Instance, Solution, ValidationReport};
pub use orchestrator::{ExperimentPlan, RunRecord, SolverAdapter};

/// Incumbent trace with `f64` times and costs.
pub type Trace = orchestrator::Trace<f64>;
pub type TraceF32 = orchestrator::Trace<f32>;
pub type TraceMetrics = metrics::TraceMetrics<f64>;
pub type PrimalGapFunction = metrics::PrimalGapFunction<f64>;
pub type BoxplotStats = metrics::BoxplotStats<f64>;
pub type TestResult = stats::TestResult<f64>;
pub type TestResultF32 = stats::TestResult<f32>;
pub type SignedRank = stats::SignedRank<f64>;
pub type Decision = stats::Decision<f64>;
pub type AlgoPoint = report::AlgoPoint<f64>;

/// Exact tail probability of the signed-rank statistic, `count / 2^n`.
pub type ExactPValue = num_rational::Ratio<u64>;
