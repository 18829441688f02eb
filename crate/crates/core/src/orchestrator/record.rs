use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Trace, TraceMode};
use crate::instance::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitStatus {
    Ok,
    Timeout,
    Crash,
}

/// Which clock produced `wall_time` and the trace timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    /// Elapsed real time of the solver process.
    #[default]
    Wall,
    /// Deterministic work-unit clock of the built-in solver.
    Virtual,
}

/// Outcome of one solver run; one line of a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: String,
    pub instance: String,
    pub seed: u64,
    pub trace: Trace<f64>,
    /// Cost of the last incumbent; absent when the run produced nothing.
    pub final_cost: Option<f64>,
    pub final_solution: Option<Solution>,
    pub wall_time: f64,
    pub cpu_name: String,
    pub threads_used: u32,
    pub exit_status: ExitStatus,
    #[serde(default)]
    pub clock: ClockKind,
    pub trace_mode: TraceMode,
    pub time_limit: f64,
    /// Free text reported by GPU-assisted solvers; never computed here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpu_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Identity of a run inside an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub solver: String,
    pub instance: String,
    pub seed: u64,
}

impl RunRecord {
    pub fn key(&self) -> RunKey {
        RunKey {
            solver: self.solver.clone(),
            instance: self.instance.clone(),
            seed: self.seed,
        }
    }

    /// Checks the record-level invariants.
    pub fn check(&self) -> Result<(), String> {
        match (self.trace.final_cost(), self.final_cost) {
            (Some(a), Some(b)) if a != b => {
                return Err(format!("final_cost {b} differs from last trace cost {a}"))
            }
            (Some(_), None) => return Err("trace present but final_cost missing".into()),
            _ => {}
        }
        if !(self.wall_time.is_finite() && self.wall_time >= 0.0) {
            return Err(format!("invalid wall_time {}", self.wall_time));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt record: {detail}")]
    Corrupt { path: PathBuf, line: usize, detail: String },
}

/// Append-only result file with one JSON record per line.
///
/// Appends are serialized and flushed to disk before they become visible to
/// readers, so a reader's snapshot is always a prefix of the file. A torn
/// final line (from a crash mid-write) is discarded when the file is opened.
#[derive(Debug)]
pub struct ResultStore {
    path: PathBuf,
    records: RwLock<Vec<RunRecord>>,
    file: Mutex<File>,
}

fn read_records(path: &Path) -> Result<(Vec<RunRecord>, u64, bool), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0, false)),
        Err(e) => return Err(io(e)),
    };
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(io)?;
        if n == 0 {
            return Ok((records, good_len, false));
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        if buf.trim().is_empty() && complete {
            good_len += n as u64;
            continue;
        }
        match serde_json::from_str::<RunRecord>(buf.trim_end()) {
            Ok(rec) if complete => {
                records.push(rec);
                good_len += n as u64;
            }
            Ok(_) => return Ok((records, good_len, true)),
            Err(e) => {
                // Only the last line may be torn.
                let mut rest = String::new();
                std::io::Read::read_to_string(&mut reader, &mut rest).map_err(io)?;
                if !complete || rest.trim().is_empty() {
                    return Ok((records, good_len, true));
                }
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: line_no,
                    detail: e.to_string(),
                });
            }
        }
    }
}

/// Reads every complete record of a result file, ignoring a torn tail.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>, StoreError> {
    if !path.exists() {
        return Err(StoreError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "result file not found"),
        });
    }
    let (records, _, torn) = read_records(path)?;
    if torn {
        log::warn!("{}: ignoring incomplete final record", path.display());
    }
    Ok(records)
}

impl ResultStore {
    /// Opens or creates the file, truncating a torn final line.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let (records, good_len, torn) = read_records(&path)?;
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).read(true).open(&path).map_err(io)?;
        if torn {
            log::warn!("{}: truncating incomplete final record", path.display());
            file.set_len(good_len).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        Ok(ResultStore {
            path,
            records: RwLock::new(records),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durably appends one record.
    pub fn append(&self, rec: &RunRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(rec).expect("records serialize");
        line.push('\n');
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        {
            let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
            f.write_all(line.as_bytes()).map_err(io)?;
            f.sync_data().map_err(io)?;
        }
        self.records.write().unwrap_or_else(|p| p.into_inner()).push(rec.clone());
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<RunRecord> {
        self.records.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> HashSet<RunKey> {
        self.records
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .iter()
            .map(RunRecord::key)
            .collect()
    }
}
