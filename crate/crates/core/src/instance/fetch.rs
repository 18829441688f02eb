//! Downloading instances and published solutions into a local cache.
//!
//! Files are stored as `<cache>/<name>.vrp` and `<cache>/<name>.sol`. A
//! solution that the server does not have is remembered with an empty
//! `<name>.sol.missing` marker so repeated calls never hit the network for a
//! name that is fully cached. Every file is written to a temporary file in the
//! cache directory and renamed into place, so concurrent fetches of the same
//! name never observe a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use super::{parse_instance, parse_solution, Instance, InstanceError, Solution, SolutionNumbering};

pub const DEFAULT_SOURCE_URL: &str = "http://vrp.atd-lab.inf.puc-rio.br/media/com_vrp/instances/X";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("{name}: network unavailable: {detail}")]
    NetworkUnavailable { name: String, detail: String },
    #[error("{url}: HTTP failure: {detail}")]
    HttpFailure { url: String, detail: String },
    #[error("{name}: parse failure: {source}")]
    ParseFailure {
        name: String,
        #[source]
        source: InstanceError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    /// Base URL; files are requested as `<base>/<name>.vrp` and `<base>/<name>.sol`.
    pub source_url: String,
    pub cache_dir: PathBuf,
    /// Never touch the network; cache misses become `NetworkUnavailable`.
    pub offline: bool,
    pub timeout: Duration,
}

impl FetchOptions {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        FetchOptions {
            source_url: DEFAULT_SOURCE_URL.to_string(),
            cache_dir: cache_dir.into(),
            offline: false,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchedInstance {
    pub instance: Instance,
    /// Declared cost of the published solution, when one exists.
    pub bks: Option<f64>,
    pub solution: Option<Solution>,
    pub vrp_path: PathBuf,
    pub sol_path: Option<PathBuf>,
    /// True when nothing was downloaded for this name.
    pub from_cache: bool,
}

enum Download {
    Body(String),
    NotFound,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FetchError + '_ {
    move |source| FetchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn store_atomically(dir: &Path, target: &Path, bytes: &[u8]) -> Result<(), FetchError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(target))?;
    tmp.as_file().sync_all().map_err(io_err(target))?;
    tmp.persist(target).map_err(|e| FetchError::Io {
        path: target.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn download(agent: &ureq::Agent, url: &str, name: &str) -> Result<Download, FetchError> {
    match agent.get(url).call() {
        Ok(mut resp) => resp
            .body_mut()
            .read_to_string()
            .map(Download::Body)
            .map_err(|e| FetchError::HttpFailure {
                url: url.to_string(),
                detail: e.to_string(),
            }),
        Err(ureq::Error::StatusCode(404)) => Ok(Download::NotFound),
        Err(ureq::Error::StatusCode(code)) => Err(FetchError::HttpFailure {
            url: url.to_string(),
            detail: format!("status {code}"),
        }),
        Err(
            e @ (ureq::Error::Io(_)
            | ureq::Error::HostNotFound
            | ureq::Error::ConnectionFailed
            | ureq::Error::Timeout(_)),
        ) => Err(FetchError::NetworkUnavailable {
            name: name.to_string(),
            detail: e.to_string(),
        }),
        Err(e) => Err(FetchError::HttpFailure {
            url: url.to_string(),
            detail: e.to_string(),
        }),
    }
}

/// Fetches each name, returning one result per name in input order.
///
/// A name whose instance file is cached is served without network access.
pub fn fetch_instances(opts: &FetchOptions, names: &[&str]) -> Vec<Result<FetchedInstance, FetchError>> {
    if let Err(e) = fs::create_dir_all(&opts.cache_dir) {
        let err = || FetchError::Io {
            path: opts.cache_dir.clone(),
            source: std::io::Error::new(e.kind(), e.to_string()),
        };
        return names.iter().map(|_| Err(err())).collect();
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(opts.timeout))
        .build()
        .into();
    names.iter().map(|name| fetch_one(opts, &agent, name)).collect()
}

fn fetch_one(opts: &FetchOptions, agent: &ureq::Agent, name: &str) -> Result<FetchedInstance, FetchError> {
    let dir = &opts.cache_dir;
    let base = opts.source_url.trim_end_matches('/');
    let vrp_path = dir.join(format!("{name}.vrp"));
    let sol_path = dir.join(format!("{name}.sol"));
    let missing_marker = dir.join(format!("{name}.sol.missing"));
    let mut from_cache = true;

    let offline_err = || FetchError::NetworkUnavailable {
        name: name.to_string(),
        detail: "offline mode and not cached".into(),
    };

    let vrp_text = if vrp_path.exists() {
        fs::read_to_string(&vrp_path).map_err(io_err(&vrp_path))?
    } else {
        if opts.offline {
            return Err(offline_err());
        }
        from_cache = false;
        let url = format!("{base}/{name}.vrp");
        match download(agent, &url, name)? {
            Download::Body(text) => {
                // Validate before caching so a bad download is not kept.
                parse_instance(&text).map_err(|source| FetchError::ParseFailure {
                    name: name.to_string(),
                    source,
                })?;
                store_atomically(dir, &vrp_path, text.as_bytes())?;
                text
            }
            Download::NotFound => {
                return Err(FetchError::HttpFailure {
                    url,
                    detail: "status 404".into(),
                })
            }
        }
    };
    let instance = parse_instance(&vrp_text).map_err(|source| FetchError::ParseFailure {
        name: name.to_string(),
        source,
    })?;

    let sol_text = if sol_path.exists() {
        Some(fs::read_to_string(&sol_path).map_err(io_err(&sol_path))?)
    } else if missing_marker.exists() || opts.offline {
        None
    } else {
        from_cache = false;
        match download(agent, &format!("{base}/{name}.sol"), name)? {
            Download::Body(text) => {
                store_atomically(dir, &sol_path, text.as_bytes())?;
                Some(text)
            }
            Download::NotFound => {
                store_atomically(dir, &missing_marker, b"")?;
                None
            }
        }
    };

    let (bks, solution) = match &sol_text {
        Some(text) => {
            let parsed = parse_solution(text, &instance, SolutionNumbering::Cvrplib).map_err(|source| {
                FetchError::ParseFailure {
                    name: format!("{name}.sol"),
                    source,
                }
            })?;
            let mut sol = parsed.solution;
            sol.source = format!("{base}/{name}.sol");
            (parsed.declared_cost.or(Some(sol.cost)), Some(sol))
        }
        None => (None, None),
    };

    Ok(FetchedInstance {
        instance,
        bks,
        solution,
        vrp_path,
        sol_path: sol_text.map(|_| sol_path),
        from_cache,
    })
}
