//! Running solvers and storing their results.

mod record;
mod reference;
mod runner;
mod trace;

pub use record::{load_records, ClockKind, ExitStatus, ResultStore, RunKey, RunRecord, StoreError};
pub use reference::{reference_solve, WORK_UNIT_SECONDS};
pub use runner::{
    run_experiment, run_solver, ExperimentPlan, PlanError, ResultSet, RunError, SolverAdapter, TraceMode,
    BUILTIN_COMMAND,
};
pub use trace::{parse_trace, Trace, TraceError, TraceEvent, TraceWarning};

/// Seconds a solver may run past its time limit before it is killed.
pub const GRACE_SECONDS: f64 = 2.0;
