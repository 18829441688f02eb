use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use super::ReportError;
use crate::instance::BksRegistry;
use crate::metrics::{gap, RunStats};

/// Rounds half-way cases towards positive infinity.
///
/// A tolerance of `1e-9` in scaled units absorbs binary representation
/// error, so `1.005` rounds to `1.01` at two decimals.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let r = (x * scale + 0.5 + 1e-9).floor() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Two-decimal gap text.
pub fn format_gap(g: f64) -> String {
    format!("{:.2}", round_half_up(g, 2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub avg: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub instance: String,
    pub bks: f64,
    /// One entry per solver column; `None` when the solver has no result.
    pub cells: Vec<Option<TableCell>>,
}

/// Per-instance Avg and Gap columns per solver, with a mean-gap footer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsTable {
    pub solvers: Vec<String>,
    pub rows: Vec<TableRow>,
    /// Mean of the available per-instance gaps of each solver.
    pub mean_gaps: Vec<Option<f64>>,
}

/// Orders names so that embedded numbers compare numerically (`X-n101` before `X-n1001`).
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            ((true, p), (true, q)) => {
                let (p, q) = (p.trim_start_matches('0'), q.trim_start_matches('0'));
                p.len().cmp(&q.len()).then_with(|| p.cmp(q))
            }
            ((_, p), (_, q)) => p.cmp(q),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Builds the table. Solvers keep their order of first appearance; rows
/// are sorted by instance name with numbers compared numerically.
pub fn build_results_table(stats: &[RunStats], reg: &BksRegistry) -> Result<ResultsTable, ReportError> {
    let mut solvers: Vec<String> = Vec::new();
    let mut instances: Vec<String> = Vec::new();
    for s in stats {
        if !solvers.contains(&s.solver) {
            solvers.push(s.solver.clone());
        }
        if !instances.contains(&s.instance) {
            instances.push(s.instance.clone());
        }
    }
    instances.sort_by(|a, b| natural_cmp(a, b));
    let mut rows = Vec::with_capacity(instances.len());
    for inst in &instances {
        let bks = reg.lookup(inst).map_err(|_| ReportError::MissingBks(inst.clone()))?;
        let mut cells: Vec<Option<TableCell>> = vec![None; solvers.len()];
        for s in stats.iter().filter(|s| &s.instance == inst) {
            let col = solvers.iter().position(|x| x == &s.solver).expect("collected");
            if cells[col].is_some() {
                return Err(ReportError::DuplicateCell {
                    solver: s.solver.clone(),
                    instance: inst.clone(),
                });
            }
            let g = gap(s.avg_cost, bks).map_err(|_| ReportError::MissingBks(inst.clone()))?;
            cells[col] = Some(TableCell { avg: s.avg_cost, gap: g });
        }
        rows.push(TableRow {
            instance: inst.clone(),
            bks,
            cells,
        });
    }
    let mean_gaps = (0..solvers.len())
        .map(|c| {
            let gaps: Vec<f64> = rows.iter().filter_map(|r| r.cells[c].as_ref().map(|x| x.gap)).collect();
            (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
        })
        .collect();
    Ok(ResultsTable {
        solvers,
        rows,
        mean_gaps,
    })
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

impl ResultsTable {
    fn grid(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.rows.len() + 2);
        let mut header = vec!["Instance".to_string(), "BKS".to_string()];
        for s in &self.solvers {
            header.push(format!("{s} Avg"));
            header.push(format!("{s} Gap"));
        }
        out.push(header);
        for r in &self.rows {
            let mut line = vec![r.instance.clone(), fmt_num(r.bks)];
            for c in &r.cells {
                match c {
                    Some(c) => {
                        line.push(format!("{:.1}", c.avg));
                        line.push(format_gap(c.gap));
                    }
                    None => {
                        line.push("-".into());
                        line.push("-".into());
                    }
                }
            }
            out.push(line);
        }
        let mut footer = vec!["Mean".to_string(), String::new()];
        for m in &self.mean_gaps {
            footer.push(String::new());
            footer.push(m.map_or_else(|| "-".into(), format_gap));
        }
        out.push(footer);
        out
    }

    /// Aligned plain text: names left-aligned, numbers right-aligned.
    pub fn to_text(&self) -> String {
        let grid = self.grid();
        let cols = grid[0].len();
        let widths: Vec<usize> = (0..cols).map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    line.push_str("  ");
                }
                if c == 0 {
                    let _ = write!(line, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(line, "{cell:>w$}", w = widths[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
            if i == 0 || i + 2 == grid.len() {
                let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["instance".to_string(), "bks".to_string()];
        for s in &self.solvers {
            header.push(format!("{s}_avg"));
            header.push(format!("{s}_gap"));
        }
        w.write_record(&header).expect("in-memory write");
        for row in &self.grid()[1..] {
            let cells: Vec<&str> = row.iter().map(|c| if c == "-" { "" } else { c.as_str() }).collect();
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}
