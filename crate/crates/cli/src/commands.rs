use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use benchlab_core::gen::{generate_instance, generate_suite, CustomerPosition, DemandKind, DepotPosition, GenSpec};
use benchlab_core::instance::{fetch_instances, parse_instance, parse_solution, validate_solution, FetchOptions};
use benchlab_core::metrics::{boxplot_stats, convergence_profile, default_grid};
use benchlab_core::orchestrator::{reference_solve, run_experiment, ResultStore, TraceMode};
use benchlab_core::report::{
    boxplot_sidecar, build_results_table, convergence_sidecar, performance_sidecar, render_boxplots,
    render_convergence_chart, render_performance_chart, AlgoPoint,
};
use benchlab_core::stats::{bonferroni, compare_protocol, decide, read_paired_gaps, Decision, Outcome, StatsError};
use benchlab_core::{ExperimentPlan, Instance, Trace};
use serde::Deserialize;

use crate::analysis::{self, Dataset};
use crate::{
    ChartKind, ChartsArgs, CompareArgs, Customers, Demand, Depot, FetchArgs, GenerateArgs, Numbering, RunArgs,
    SolveArgs, ValidateArgs,
};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn validate(a: ValidateArgs) -> Result<bool> {
    let inst = load_instance(&a.instance)?;
    let numbering = match a.numbering {
        Numbering::NodeId => benchlab_core::instance::SolutionNumbering::NodeId,
        Numbering::Cvrplib => benchlab_core::instance::SolutionNumbering::Cvrplib,
    };
    let parsed = parse_solution(&read(&a.solution)?, &inst, numbering)
        .with_context(|| format!("{}", a.solution.display()))?;
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    let report = validate_solution(&inst, &parsed.solution);
    print!("{}: {report}", inst.name());
    Ok(report.feasible)
}

pub fn run(a: RunArgs) -> Result<bool> {
    let plan = ExperimentPlan::from_toml(&read(&a.plan)?).with_context(|| format!("{}", a.plan.display()))?;
    let base = a.plan.parent().map(Path::to_path_buf).unwrap_or_default();
    let instances = plan
        .instance_paths(&base)
        .iter()
        .map(|p| load_instance(p))
        .collect::<Result<Vec<_>>>()?;
    let results = a.results.unwrap_or_else(|| base.join("results.jsonl"));
    let store = ResultStore::open(&results)?;
    let rs = run_experiment(&plan, &instances, &store)?;
    for e in &rs.errors {
        eprintln!("run failed: {e}");
    }
    println!(
        "{}: {} new, {} already present, {} failed, {} total",
        results.display(),
        rs.new_records,
        rs.skipped,
        rs.errors.len(),
        rs.records.len()
    );
    Ok(rs.errors.is_empty())
}

#[derive(Debug, Deserialize)]
struct PValueRow {
    comparison: String,
    p_h0: f64,
    p_h1: f64,
    #[serde(default)]
    p_opposite: Option<f64>,
}

fn fmt_p(p: f64) -> String {
    if p == 0.0 || p >= 1e-4 {
        format!("{p:.6}")
    } else {
        format!("{p:.5e}")
    }
}

fn decision_row(out: &mut String, csv_rows: &mut Vec<Vec<String>>, label: &str, n: Option<usize>, d: &Decision<f64>) {
    let n_text = n.map_or_else(|| "-".to_string(), |n| n.to_string());
    let _ = writeln!(
        out,
        "{label:<32} n={n_text:<4} p(H0)={}  p(H1)={}  -> {}",
        fmt_p(d.p_h0),
        fmt_p(d.p_h1),
        d.outcome
    );
    csv_rows.push(vec![
        label.to_string(),
        n_text,
        fmt_p(d.p_h0),
        fmt_p(d.p_h1),
        fmt_p(d.p_opposite),
        d.alpha_adjusted.to_string(),
        d.outcome.to_string(),
    ]);
}

fn paired_gaps(data: &Dataset, a: &str, b: &str) -> (Vec<f64>, Vec<f64>) {
    let mut xa = Vec::new();
    let mut xb = Vec::new();
    for s in data.stats_of(a) {
        if let Some(o) = data.stats_of(b).find(|o| o.instance == s.instance) {
            xa.push(s.avg_gap);
            xb.push(o.avg_gap);
        }
    }
    (xa, xb)
}

pub fn compare(a: CompareArgs) -> Result<bool> {
    let alpha = bonferroni(a.alpha0, a.n_comparisons)?;
    let have_data = !a.data.results.is_empty() || !a.data.published.is_empty();
    if !have_data && a.paired.is_none() && a.pvalues.is_none() {
        bail!("nothing to compare (use --results, --published, --paired or --pvalues)");
    }
    let mut report = String::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut all_equivalent = true;
    let mut table_files = None;

    if have_data {
        let data = analysis::load(&a.data)?;
        let table = build_results_table(&data.stats, &data.registry)?;
        report.push_str(&table.to_text());
        report.push('\n');
        table_files = Some((table.to_text(), table.to_csv()));
        let solvers = data.solvers();
        let reference = match &a.reference {
            Some(r) if solvers.contains(r) => r.clone(),
            Some(r) => bail!("unknown reference solver {r:?}"),
            None => solvers[0].clone(),
        };
        let _ = writeln!(report, "adjusted alpha: {alpha} (alpha0 {} / {})", a.alpha0, a.n_comparisons);
        for other in solvers.iter().filter(|s| **s != reference) {
            let (xa, xb) = paired_gaps(&data, &reference, other);
            let label = format!("{reference} vs {other}");
            match compare_protocol(&xa, &xb, a.alpha0, a.n_comparisons) {
                Ok(d) => {
                    all_equivalent &= d.outcome == Outcome::Equivalent;
                    decision_row(&mut report, &mut rows, &label, Some(xa.len()), &d);
                }
                Err(e @ (StatsError::TooFewPairs { .. } | StatsError::DegenerateVariance)) => {
                    let _ = writeln!(report, "{label:<32} skipped: {e}");
                }
                Err(e) => return Err(e.into()),
            }
        }
    } else {
        let _ = writeln!(report, "adjusted alpha: {alpha} (alpha0 {} / {})", a.alpha0, a.n_comparisons);
    }

    if let Some(p) = &a.paired {
        let pairs = read_paired_gaps(fs::File::open(p).with_context(|| format!("cannot open {}", p.display()))?)?;
        let xa: Vec<f64> = pairs.iter().map(|r| r.gap_a).collect();
        let xb: Vec<f64> = pairs.iter().map(|r| r.gap_b).collect();
        let d = compare_protocol(&xa, &xb, a.alpha0, a.n_comparisons)?;
        all_equivalent &= d.outcome == Outcome::Equivalent;
        decision_row(&mut report, &mut rows, &format!("paired {}", p.display()), Some(xa.len()), &d);
    }

    if let Some(p) = &a.pvalues {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(fs::File::open(p).with_context(|| format!("cannot open {}", p.display()))?);
        for (i, row) in rdr.deserialize::<PValueRow>().enumerate() {
            let row = row.with_context(|| format!("{}: row {}", p.display(), i + 2))?;
            for v in [Some(row.p_h0), Some(row.p_h1), row.p_opposite].into_iter().flatten() {
                if !(0.0..=1.0).contains(&v) {
                    bail!("{}: row {}: p-value {v} outside [0, 1]", p.display(), i + 2);
                }
            }
            let d = decide(row.p_h0, row.p_h1, row.p_opposite, alpha);
            all_equivalent &= d.outcome == Outcome::Equivalent;
            decision_row(&mut report, &mut rows, &row.comparison, None, &d);
        }
    }

    print!("{report}");
    if let Some(dir) = &a.out {
        if let Some((text, csv_text)) = &table_files {
            write(&dir.join("table.txt"), text)?;
            write(&dir.join("table.csv"), csv_text)?;
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["comparison", "n_pairs", "p_h0", "p_h1", "p_opposite", "alpha", "outcome"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        write(&dir.join("decisions.csv"), &String::from_utf8(w.into_inner()?)?)?;
    }
    Ok(all_equivalent)
}

fn mean(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.iter().sum::<f64>() / s.len() as f64
}

pub fn charts(a: ChartsArgs) -> Result<bool> {
    let data = analysis::load(&a.data)?;
    let solvers = data.solvers();
    let (name, svg, sidecar) = match a.kind {
        ChartKind::Performance => {
            let points: Vec<AlgoPoint<f64>> = solvers
                .iter()
                .map(|s| {
                    let times: Vec<f64> = data.stats_of(s).map(|r| r.avg_normalized_time / 60.0).collect();
                    let gaps: Vec<f64> = data.stats_of(s).map(|r| r.avg_gap).collect();
                    AlgoPoint::new(s.clone(), mean(&times), mean(&gaps))
                })
                .collect();
            ("performance", render_performance_chart(&points), performance_sidecar(&points))
        }
        ChartKind::Boxplot => {
            let groups = solvers
                .iter()
                .map(|s| {
                    let gaps: Vec<f64> = data.stats_of(s).map(|r| r.avg_gap).collect();
                    Ok((s.clone(), boxplot_stats(&gaps)?))
                })
                .collect::<Result<Vec<_>>>()?;
            ("boxplot", render_boxplots(&groups), boxplot_sidecar(&groups))
        }
        ChartKind::Convergence => {
            let (profiles, excluded) = convergence_profiles(&data)?;
            if excluded > 0 {
                log::warn!("excluded {excluded} final-only runs from the convergence chart");
            }
            (
                "convergence",
                render_convergence_chart(&profiles)?,
                convergence_sidecar(&profiles)?,
            )
        }
    };
    let svg_path = a.out.join(format!("{name}.svg"));
    let csv_path = a.out.join(format!("{name}.csv"));
    write(&svg_path, &svg)?;
    write(&csv_path, &sidecar)?;
    println!("{}\n{}", svg_path.display(), csv_path.display());
    Ok(true)
}

type Profiles = Vec<(String, Vec<(f64, f64)>)>;

fn convergence_profiles(data: &Dataset) -> Result<(Profiles, usize)> {
    let mut excluded = 0;
    let mut usable: Vec<(&str, &Trace, f64)> = Vec::new();
    for r in &data.records {
        if r.trace_mode == TraceMode::FinalOnly {
            excluded += 1;
            continue;
        }
        if let Ok(bks) = data.registry.lookup(&r.instance) {
            usable.push((&r.solver, &r.trace, bks));
        }
    }
    if usable.is_empty() {
        bail!("no traced runs to chart");
    }
    let horizon = data.records.iter().map(|r| r.time_limit).fold(0.0, f64::max);
    let traces: Vec<&Trace> = usable.iter().map(|u| u.1).collect();
    let grid = default_grid(&traces, horizon)?;
    let mut profiles = Vec::new();
    for solver in data.solvers() {
        let mine: Vec<(&Trace, f64)> = usable.iter().filter(|u| u.0 == solver).map(|u| (u.1, u.2)).collect();
        if !mine.is_empty() {
            profiles.push((solver, convergence_profile(&mine, &grid)?));
        }
    }
    Ok((profiles, excluded))
}

pub fn generate(a: GenerateArgs) -> Result<bool> {
    let mut spec = match &a.config {
        Some(p) => GenSpec::from_config_str(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => GenSpec::default(),
    };
    if let Some(n) = a.n_customers {
        spec.n_customers = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(d) = a.depot {
        spec.depot_position = match d {
            Depot::Central => DepotPosition::Central,
            Depot::Eccentric => DepotPosition::Eccentric,
            Depot::Random => DepotPosition::Random,
        };
    }
    if let Some(c) = a.customers {
        spec.customer_position = match c {
            Customers::UniformRandom => CustomerPosition::UniformRandom,
            Customers::Clustered => CustomerPosition::Clustered,
            Customers::Mixed => CustomerPosition::Mixed,
        };
    }
    if let Some(k) = a.clusters {
        spec.n_clusters = k;
    }
    match a.demand {
        Some(Demand::Unit) => spec.demand = DemandKind::Unit,
        Some(Demand::SmallLargeMix) => spec.demand = DemandKind::SmallLargeMix,
        Some(Demand::Uniform) => {
            let (Some(lo), Some(hi)) = (a.demand_lo, a.demand_hi) else {
                bail!("--demand uniform needs --demand-lo and --demand-hi");
            };
            spec.demand = DemandKind::Uniform { lo, hi };
        }
        None => {}
    }
    if let Some(r) = a.route_size {
        spec.target_route_size = r;
    }
    if let Some(g) = a.grid {
        spec.grid_size = g;
    }
    spec.validate()?;
    let instances = if a.sizes.is_empty() && a.seeds.is_empty() {
        vec![generate_instance(&spec)?]
    } else {
        let sizes = if a.sizes.is_empty() { vec![spec.n_customers] } else { a.sizes.clone() };
        let seeds = if a.seeds.is_empty() { vec![spec.seed] } else { a.seeds.clone() };
        generate_suite(&spec, &sizes, &seeds)?
    };
    for inst in &instances {
        let path: PathBuf = a.out.join(format!("{}.vrp", inst.name()));
        write(&path, &inst.to_tsplib())?;
        println!("{}", path.display());
    }
    Ok(true)
}

pub fn fetch(a: FetchArgs) -> Result<bool> {
    let mut opts = FetchOptions::new(&a.cache_dir);
    opts.offline = a.offline;
    if let Some(u) = a.source_url {
        opts.source_url = u;
    }
    let names: Vec<&str> = a.names.iter().map(String::as_str).collect();
    let mut ok = true;
    for (name, r) in names.iter().zip(fetch_instances(&opts, &names)) {
        match r {
            Ok(f) => {
                let origin = if f.from_cache { "cached" } else { "downloaded" };
                match (&f.bks, &f.solution) {
                    (Some(bks), Some(sol)) => {
                        let report = validate_solution(&f.instance, sol);
                        let verdict = if report.feasible { "feasible" } else { "infeasible" };
                        println!("{name}: {origin}, bks {bks}, solution {verdict} with cost {}", report.recomputed_cost);
                        ok &= report.feasible;
                    }
                    _ => println!("{name}: {origin}, no published solution"),
                }
            }
            Err(e) => {
                eprintln!("{name}: {e}");
                ok = false;
            }
        }
    }
    Ok(ok)
}

pub fn solve(a: SolveArgs) -> Result<bool> {
    let inst = load_instance(&a.instance)?;
    let (sol, trace) = reference_solve(&inst, a.seed, a.time_limit);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for e in trace.events() {
        writeln!(out, "TRACE {} {}", e.t, e.cost)?;
    }
    write(&a.output, &sol.to_text())?;
    Ok(true)
}
