//! Result tables, Pareto fronts and SVG charts.
//!
//! Every renderer is a pure function of its input and formats numbers with a
//! fixed number of decimals, so identical inputs give byte-identical output.

mod charts;
mod pareto;
mod svg;
mod table;

use thiserror::Error;

pub use charts::{
    boxplot_sidecar, convergence_sidecar, performance_sidecar, render_boxplots, render_convergence_chart,
    render_performance_chart, split_panels, PANEL_SPLIT_FACTOR,
};
pub use pareto::{pareto_front, AlgoPoint, ParetoSplit};
pub use table::{build_results_table, format_gap, round_half_up, ResultsTable, TableCell, TableRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("no BKS for instance {0:?}")]
    MissingBks(String),
    #[error("duplicate cell for solver {solver:?} on instance {instance:?}")]
    DuplicateCell { solver: String, instance: String },
    #[error("profiles do not share a time grid: {0}")]
    GridMismatch(String),
    #[error("empty input")]
    EmptyInput,
}
