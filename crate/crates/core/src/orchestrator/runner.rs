use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{ClockKind, ExitStatus, ResultStore, RunRecord, StoreError};
use super::reference::reference_solve;
use super::trace::{parse_trace_line, Trace, TraceError};
use super::GRACE_SECONDS;
use crate::instance::{parse_solution, validate_solution, Instance, SolutionNumbering};

/// Command value that selects the in-process reference solver.
pub const BUILTIN_COMMAND: &str = "builtin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// The solver prints `TRACE <t> <cost>` lines on stdout.
    NativeTrace,
    /// Incumbents are scraped from stdout with `trace_pattern`.
    WrapperParse,
    /// Only the final solution is known.
    FinalOnly,
}

/// How to invoke one solver.
///
/// The command template is split like a shell command line; `{instance}`,
/// `{seed}`, `{timelimit}` and `{output}` are substituted per run. A solver
/// writes its final solution (`Route #k: ...` lines, 1-based node ids) to
/// `{output}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverAdapter {
    pub name: String,
    pub command: String,
    pub trace_mode: TraceMode,
    pub cpu_name: String,
    /// Regex with a named group `cost` and optionally `t`; lines without `t`
    /// are stamped with their arrival time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_pattern: Option<String>,
}

impl SolverAdapter {
    pub fn builtin(name: impl Into<String>, cpu_name: impl Into<String>) -> Self {
        SolverAdapter {
            name: name.into(),
            command: BUILTIN_COMMAND.into(),
            trace_mode: TraceMode::NativeTrace,
            cpu_name: cpu_name.into(),
            trace_pattern: None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        self.command.trim() == BUILTIN_COMMAND
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Invalid(format!("adapter {:?}: {m}", self.name)));
        if self.name.trim().is_empty() {
            return bad("empty name".into());
        }
        if !self.is_builtin() {
            if !self.command.contains("{instance}") {
                return bad("command template lacks {instance}".into());
            }
            shell_words::split(&self.command).map_err(|e| PlanError::Invalid(e.to_string()))?;
        }
        match (self.trace_mode, &self.trace_pattern) {
            (TraceMode::WrapperParse, None) => return bad("wrapper-parse needs trace_pattern".into()),
            (TraceMode::WrapperParse, Some(p)) => {
                let re = Regex::new(p).map_err(|e| PlanError::Invalid(e.to_string()))?;
                if !re.capture_names().flatten().any(|n| n == "cost") {
                    return bad("trace_pattern lacks a `cost` group".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid plan: {0}")]
    Invalid(String),
}

/// Solvers × instances × seeds under one common time limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(rename = "adapter")]
    pub adapters: Vec<SolverAdapter>,
    /// Instance files; relative paths resolve against the plan file.
    pub instances: Vec<String>,
    pub seeds: Vec<u64>,
    pub time_limit: f64,
    #[serde(default = "one")]
    pub parallel_workers: usize,
}

fn one() -> usize {
    1
}

impl ExperimentPlan {
    /// Parses a TOML plan: top-level settings plus `[[adapter]]` blocks.
    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| PlanError::Invalid(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::Invalid(m.to_string()));
        if self.adapters.is_empty() {
            return bad("no adapters");
        }
        if self.instances.is_empty() {
            return bad("no instances");
        }
        if self.seeds.is_empty() {
            return bad("no seeds");
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return bad("time_limit must be positive");
        }
        if self.parallel_workers == 0 {
            return bad("parallel_workers must be at least 1");
        }
        let mut names = std::collections::HashSet::new();
        for a in &self.adapters {
            a.validate()?;
            if !names.insert(a.name.as_str()) {
                return Err(PlanError::Invalid(format!("duplicate adapter name {:?}", a.name)));
            }
        }
        Ok(())
    }

    pub fn instance_paths(&self, base: &Path) -> Vec<PathBuf> {
        self.instances.iter().map(|p| base.join(p)).collect()
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{adapter}: cannot start solver: {detail}")]
    Spawn { adapter: String, detail: String },
    #[error("{adapter}: trace parse failure: {detail}")]
    TraceParse { adapter: String, detail: String },
    #[error("{adapter}: {detail}")]
    Io { adapter: String, detail: String },
}

fn substitute(template: &str, instance: &Path, seed: u64, time_limit: f64, output: &Path) -> Result<Vec<String>, String> {
    let words = shell_words::split(template).map_err(|e| e.to_string())?;
    if words.is_empty() {
        return Err("empty command".into());
    }
    Ok(words
        .into_iter()
        .map(|w| {
            w.replace("{instance}", &instance.to_string_lossy())
                .replace("{seed}", &seed.to_string())
                .replace("{timelimit}", &time_limit.to_string())
                .replace("{output}", &output.to_string_lossy())
        })
        .collect())
}

/// Current thread count of a live process, from `/proc/<pid>/status`.
fn thread_count(pid: u32) -> Option<u32> {
    let status = std::fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("Threads:"))
        .and_then(|v| v.trim().parse().ok())
}

/// Kills the solver's whole process group.
fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    // SAFETY: plain syscall on the process group created at spawn.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
}

fn builtin_record(adapter: &SolverAdapter, inst: &Instance, seed: u64, time_limit: f64) -> RunRecord {
    let (solution, trace) = reference_solve(inst, seed, time_limit);
    RunRecord {
        solver: adapter.name.clone(),
        instance: inst.name().to_string(),
        seed,
        final_cost: trace.final_cost(),
        wall_time: trace.terminal_time(),
        trace,
        final_solution: Some(solution),
        cpu_name: adapter.cpu_name.clone(),
        threads_used: 1,
        exit_status: ExitStatus::Ok,
        clock: ClockKind::Virtual,
        trace_mode: adapter.trace_mode,
        time_limit,
        gpu_note: None,
        error: None,
    }
}

/// Runs one solver on one instance.
///
/// External solvers are killed `GRACE_SECONDS` after the time limit, which
/// marks the run `timeout`. Nonzero exits and infeasible solutions mark it
/// `crash`. A trace whose incumbent gets strictly worse is an error.
pub fn run_solver(adapter: &SolverAdapter, inst: &Instance, seed: u64, time_limit: f64) -> Result<RunRecord, RunError> {
    if adapter.is_builtin() {
        return Ok(builtin_record(adapter, inst, seed, time_limit));
    }
    let io = |detail: String| RunError::Io {
        adapter: adapter.name.clone(),
        detail,
    };
    let dir = tempfile::tempdir().map_err(|e| io(e.to_string()))?;
    let inst_path = dir.path().join(format!("{}.vrp", inst.name()));
    let out_path = dir.path().join("solution.sol");
    std::fs::write(&inst_path, inst.to_tsplib()).map_err(|e| io(e.to_string()))?;
    let argv = substitute(&adapter.command, &inst_path, seed, time_limit, &out_path).map_err(|detail| {
        RunError::Spawn {
            adapter: adapter.name.clone(),
            detail,
        }
    })?;
    let pattern = match (&adapter.trace_mode, &adapter.trace_pattern) {
        (TraceMode::WrapperParse, Some(p)) => Some(Regex::new(p).map_err(|e| RunError::Spawn {
            adapter: adapter.name.clone(),
            detail: e.to_string(),
        })?),
        _ => None,
    };

    let start = Instant::now();
    let mut cmd = Command::new(&argv[0]);
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
    let mut child = cmd
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| RunError::Spawn {
            adapter: adapter.name.clone(),
            detail: format!("{}: {e}", argv[0]),
        })?;
    let pid = child.id();

    let stdout = child.stdout.take().expect("piped stdout");
    let lines_reader = std::thread::spawn(move || {
        let mut lines = Vec::new();
        for line in BufReader::new(stdout).lines() {
            match line {
                Ok(l) => lines.push((start.elapsed().as_secs_f64(), l)),
                Err(_) => break,
            }
        }
        lines
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let deadline = start + Duration::from_secs_f64(time_limit + GRACE_SECONDS);
    let mut peak_threads = 0u32;
    let mut timed_out = false;
    let status = loop {
        if let Some(n) = thread_count(pid) {
            peak_threads = peak_threads.max(n);
        }
        match child.try_wait().map_err(|e| io(e.to_string()))? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                timed_out = true;
                kill_tree(&mut child);
                break child.wait().map_err(|e| io(e.to_string()))?;
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    kill_tree(&mut child);
    let lines = lines_reader.join().unwrap_or_default();
    let stderr_text = err_reader.join().unwrap_or_default();

    let parse_fail = |detail: String| RunError::TraceParse {
        adapter: adapter.name.clone(),
        detail,
    };
    let mut trace = Trace::empty(0.0);
    if adapter.trace_mode != TraceMode::FinalOnly {
        for (arrival, line) in &lines {
            let event = match &pattern {
                None => {
                    if !line.trim_start().starts_with("TRACE") {
                        continue;
                    }
                    Some(parse_trace_line::<f64>(line).ok_or_else(|| parse_fail(format!("malformed line {line:?}")))?)
                }
                Some(re) => match re.captures(line) {
                    None => None,
                    Some(caps) => {
                        let cost: f64 = caps["cost"]
                            .parse()
                            .map_err(|_| parse_fail(format!("bad cost in {line:?}")))?;
                        let t = match caps.name("t") {
                            Some(m) => m.as_str().parse().map_err(|_| parse_fail(format!("bad time in {line:?}")))?,
                            None => *arrival,
                        };
                        Some((t, cost))
                    }
                },
            };
            let Some((t, cost)) = event else { continue };
            match trace.push(t, cost) {
                Ok(()) => {}
                Err(TraceError::NotImproving { .. }) if trace.final_cost() == Some(cost) => {}
                Err(e) => return Err(parse_fail(format!("{e} ({line:?})"))),
            }
        }
    }

    let mut exit_status = if timed_out {
        ExitStatus::Timeout
    } else if status.success() {
        ExitStatus::Ok
    } else {
        ExitStatus::Crash
    };
    let mut error = (!status.success() && !timed_out).then(|| {
        let lines: Vec<&str> = stderr_text.lines().collect();
        let tail = lines[lines.len().saturating_sub(5)..].join("\n");
        format!("{status}; {tail}")
    });

    let mut final_solution = None;
    if let Ok(text) = std::fs::read_to_string(&out_path) {
        if !text.trim().is_empty() {
            match parse_solution(&text, inst, SolutionNumbering::NodeId) {
                Ok(parsed) => {
                    let report = validate_solution(inst, &parsed.solution);
                    if report.feasible {
                        let mut sol = parsed.solution;
                        sol.source = adapter.name.clone();
                        final_solution = Some(sol);
                    } else {
                        exit_status = ExitStatus::Crash;
                        error = Some(format!("infeasible solution: {report}"));
                    }
                }
                Err(e) => {
                    exit_status = ExitStatus::Crash;
                    error = Some(format!("unreadable solution: {e}"));
                }
            }
        }
    }

    if let Some(sol) = &final_solution {
        let tol = 1e-6 * sol.cost.abs().max(1.0);
        match trace.final_cost() {
            None => {
                let _ = trace.push(wall_time.min(time_limit + GRACE_SECONDS), sol.cost);
            }
            Some(last) if sol.cost < last - tol => {
                let t = trace.terminal_time().max(wall_time.min(time_limit + GRACE_SECONDS));
                let _ = trace.push(t, sol.cost);
            }
            Some(last) if sol.cost > last + tol => {
                exit_status = ExitStatus::Crash;
                error = Some(format!("solution cost {} is worse than the last reported incumbent {last}", sol.cost));
            }
            Some(_) => {}
        }
    } else if adapter.trace_mode == TraceMode::FinalOnly && exit_status == ExitStatus::Ok {
        exit_status = ExitStatus::Crash;
        error = Some("no final solution written".into());
    }
    let _ = trace.set_terminal_time(wall_time.max(trace.terminal_time()));

    Ok(RunRecord {
        solver: adapter.name.clone(),
        instance: inst.name().to_string(),
        seed,
        final_cost: trace.final_cost(),
        trace,
        final_solution,
        wall_time,
        cpu_name: adapter.cpu_name.clone(),
        threads_used: peak_threads.max(1),
        exit_status,
        clock: ClockKind::Wall,
        trace_mode: adapter.trace_mode,
        time_limit,
        gpu_note: None,
        error,
    })
}

/// Records and per-run failures of one experiment.
#[derive(Debug, Default)]
pub struct ResultSet {
    /// Every record in the store after the experiment, old and new.
    pub records: Vec<RunRecord>,
    pub new_records: usize,
    pub skipped: usize,
    pub errors: Vec<RunError>,
}

/// Runs every (adapter, instance, seed) combination not already stored.
///
/// At most `parallel_workers` runs are in flight. Each finished record is
/// appended to `store` before the next result is accepted, so an interrupted
/// experiment can be resumed by calling this again with the same store.
/// Only storage failures abort the experiment.
pub fn run_experiment(plan: &ExperimentPlan, instances: &[Instance], store: &ResultStore) -> Result<ResultSet, StoreError> {
    let done = store.keys();
    let mut jobs = VecDeque::new();
    let mut skipped = 0;
    for adapter in &plan.adapters {
        for inst in instances {
            for &seed in &plan.seeds {
                let key = super::RunKey {
                    solver: adapter.name.clone(),
                    instance: inst.name().to_string(),
                    seed,
                };
                if done.contains(&key) {
                    skipped += 1;
                } else {
                    jobs.push_back((adapter, inst, seed));
                }
            }
        }
    }
    let jobs = Arc::new(Mutex::new(jobs));
    let workers = plan.parallel_workers.max(1);
    let mut result = ResultSet {
        skipped,
        ..ResultSet::default()
    };
    let outcome = std::thread::scope(|scope| -> Result<(), StoreError> {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let jobs = Arc::clone(&jobs);
            scope.spawn(move || loop {
                let job = jobs.lock().unwrap_or_else(|p| p.into_inner()).pop_front();
                let Some((adapter, inst, seed)) = job else { break };
                let r = run_solver(adapter, inst, seed, plan.time_limit);
                if tx.send(r).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for r in rx {
            match r {
                Ok(rec) => {
                    if let Err(e) = store.append(&rec) {
                        jobs.lock().unwrap_or_else(|p| p.into_inner()).clear();
                        return Err(e);
                    }
                    result.new_records += 1;
                }
                Err(e) => {
                    log::warn!("{e}");
                    result.errors.push(e);
                }
            }
        }
        Ok(())
    });
    outcome?;
    result.records = store.snapshot();
    Ok(result)
}
