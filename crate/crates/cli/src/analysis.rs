use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use benchlab_core::metrics::{aggregate_all, CpuRatingTable, RunStats};
use benchlab_core::orchestrator::load_records;
use benchlab_core::{BksRegistry, RunRecord};
use serde::Deserialize;

use crate::DataArgs;

/// Everything `compare` and `charts` work from.
pub struct Dataset {
    pub records: Vec<RunRecord>,
    pub stats: Vec<RunStats>,
    pub registry: BksRegistry,
}

impl Dataset {
    /// Solver names in order of first appearance.
    pub fn solvers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.stats {
            if !out.contains(&s.solver) {
                out.push(s.solver.clone());
            }
        }
        out
    }

    pub fn stats_of<'a>(&'a self, solver: &'a str) -> impl Iterator<Item = &'a RunStats> + 'a {
        self.stats.iter().filter(move |s| s.solver == solver)
    }
}

#[derive(Debug, Deserialize)]
struct PublishedRow {
    #[serde(default)]
    solver: Option<String>,
    instance: String,
    avg_cost: f64,
    time: f64,
    cpu_name: String,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn load_ratings(args: &DataArgs) -> Result<Option<CpuRatingTable>> {
    match (&args.ratings, &args.base_cpu) {
        (Some(p), base) => {
            let t = CpuRatingTable::from_csv(open(p)?, base.as_deref()).with_context(|| format!("{}", p.display()))?;
            Ok(Some(t))
        }
        (None, Some(_)) => bail!("--base-cpu needs --ratings"),
        (None, None) => Ok(None),
    }
}

fn published_stats(
    path: &Path,
    registry: &BksRegistry,
    ratings: Option<&CpuRatingTable>,
) -> Result<Vec<RunStats>> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PublishedRow>().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let solver = row.solver.filter(|s| !s.is_empty()).unwrap_or_else(|| stem.clone());
        let time = match ratings {
            Some(t) => match t.normalize_time(row.time, &row.cpu_name) {
                Ok(v) => v,
                Err(e) => {
                    log::warn!("{}: skipping {solver}/{}: {e}", path.display(), row.instance);
                    continue;
                }
            },
            None => row.time,
        };
        let Ok(bks) = registry.lookup(&row.instance) else {
            log::warn!("{}: skipping {solver}/{}: no BKS", path.display(), row.instance);
            continue;
        };
        let gap = benchlab_core::metrics::gap(row.avg_cost, bks)?;
        out.push(RunStats {
            solver,
            instance: row.instance,
            n_runs: 0,
            avg_cost: row.avg_cost,
            best_cost: row.avg_cost,
            worst_cost: row.avg_cost,
            avg_gap: gap,
            best_gap: gap,
            worst_gap: gap,
            mean_run_gap: gap,
            avg_normalized_time: time,
        });
    }
    Ok(out)
}

/// Loads results, published rows, BKS values and ratings.
///
/// Instances without a registered BKS fall back to the best cost found in
/// the loaded results.
pub fn load(args: &DataArgs) -> Result<Dataset> {
    let mut registry = BksRegistry::x_subset();
    if let Some(p) = &args.bks {
        registry.extend(BksRegistry::from_csv(open(p)?).with_context(|| format!("{}", p.display()))?);
    }
    let ratings = load_ratings(args)?;
    let mut records = Vec::new();
    for p in &args.results {
        records.extend(load_records(p)?);
    }
    if records.is_empty() && args.published.is_empty() {
        bail!("no results given (use --results or --published)");
    }

    let mut fallback: Vec<(String, f64)> = Vec::new();
    for r in &records {
        let Some(c) = r.final_cost else { continue };
        if registry.get(&r.instance).is_some() {
            continue;
        }
        match fallback.iter_mut().find(|(n, _)| n == &r.instance) {
            Some((_, best)) => *best = best.min(c),
            None => fallback.push((r.instance.clone(), c)),
        }
    }
    for (name, best) in fallback {
        log::warn!("{name}: no BKS registered, using best found value {best}");
        registry.insert(name, best, "best found in results")?;
    }

    let (mut stats, problems) = aggregate_all(&records, |i| registry.lookup(i).ok(), ratings.as_ref());
    for (label, e) in problems {
        log::warn!("skipping {label}: {e}");
    }
    for p in &args.published {
        stats.extend(published_stats(p, &registry, ratings.as_ref())?);
    }
    if stats.is_empty() {
        bail!("no usable results");
    }
    Ok(Dataset {
        records,
        stats,
        registry,
    })
}
