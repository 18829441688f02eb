use super::pareto::{pareto_front, AlgoPoint};
use super::svg::{escape, n, Axis, Doc, HEIGHT, WIDTH};
use super::ReportError;
use crate::metrics::BoxplotStats;
use crate::Scalar;

/// A boxplot group moves to a second panel when its median exceeds this
/// factor times the largest upper whisker among the other groups.
pub const PANEL_SPLIT_FACTOR: f64 = 5.0;

const LEFT: f64 = 80.0;
const RIGHT_PAD: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM_PAD: f64 = 60.0;

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const DASHES: [&str; 4] = ["none", "6 3", "2 3", "8 3 2 3"];

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

fn padded_max(v: f64) -> f64 {
    if v > 0.0 {
        v * 1.1
    } else {
        1.0
    }
}

/// Scatter of average time against average gap with the Pareto front drawn
/// through the nondominated points in time order.
pub fn render_performance_chart<S: Scalar>(points: &[AlgoPoint<S>]) -> String {
    let split = pareto_front(points);
    let mut doc = Doc::new("Performance chart");
    let xmax = points.iter().map(|p| p.avg_time.as_f64()).fold(0.0, f64::max);
    let gmin = points.iter().map(|p| p.avg_gap.as_f64()).fold(0.0, f64::min);
    let gmax = points.iter().map(|p| p.avg_gap.as_f64()).fold(0.0, f64::max);
    let x = Axis::new(0.0, padded_max(xmax), LEFT, WIDTH - RIGHT_PAD, false);
    let y = Axis::new(gmin.min(0.0), padded_max(gmax), HEIGHT - BOTTOM_PAD, TOP, false);
    doc.axes(&x, &y, "Average time (min)", "Average % gap");
    if split.nondominated.len() >= 2 {
        let pts: Vec<String> = split
            .nondominated
            .iter()
            .map(|p| format!("{},{}", n(x.map(p.avg_time.as_f64())), n(y.map(p.avg_gap.as_f64()))))
            .collect();
        doc.raw(&format!(
            r#"<polyline class="pareto-front" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[1],
            pts.join(" ")
        ));
    }
    for p in points {
        let front = split.nondominated.iter().any(|q| q.name == p.name);
        let (px, py) = (x.map(p.avg_time.as_f64()), y.map(p.avg_gap.as_f64()));
        let fill = if front { COLORS[0] } else { "white" };
        doc.raw(&format!(
            r#"<circle class="point" data-name="{}" data-front="{}" cx="{}" cy="{}" r="5" fill="{fill}" stroke="{}"/>"#,
            escape(&p.name),
            front,
            n(px),
            n(py),
            COLORS[0]
        ));
        doc.text(px + 8.0, py - 8.0, &p.name, r#"class="point-label""#);
    }
    doc.finish()
}

pub fn performance_sidecar<S: Scalar>(points: &[AlgoPoint<S>]) -> String {
    let split = pareto_front(points);
    let mut rows = vec![vec!["name".into(), "avg_time".into(), "avg_gap".into(), "nondominated".into()]];
    for p in points {
        let front = split.nondominated.iter().any(|q| q.name == p.name);
        rows.push(vec![p.name.clone(), p.avg_time.to_string(), p.avg_gap.to_string(), front.to_string()]);
    }
    csv_string(rows)
}

fn check_grids<S: Scalar>(profiles: &[(String, Vec<(S, S)>)]) -> Result<(), ReportError> {
    let Some((first_name, first)) = profiles.first() else {
        return Err(ReportError::EmptyInput);
    };
    if first.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    for (name, p) in &profiles[1..] {
        if p.len() != first.len() || p.iter().zip(first).any(|(a, b)| a.0 != b.0) {
            return Err(ReportError::GridMismatch(format!("{name} vs {first_name}")));
        }
    }
    Ok(())
}

/// One line per algorithm over a shared time grid; log time axis when all times are positive.
pub fn render_convergence_chart<S: Scalar>(profiles: &[(String, Vec<(S, S)>)]) -> Result<String, ReportError> {
    check_grids(profiles)?;
    let grid = &profiles[0].1;
    let t0 = grid[0].0.as_f64();
    let t1 = grid[grid.len() - 1].0.as_f64();
    let log = t0 > 0.0 && t1 > t0;
    let vals = profiles.iter().flat_map(|(_, p)| p.iter().map(|v| v.1.as_f64()));
    let (vmin, vmax) = vals.fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let x = if log {
        Axis::new(t0, t1, LEFT, WIDTH - RIGHT_PAD - 150.0, true)
    } else {
        Axis::new(t0.min(0.0), t1, LEFT, WIDTH - RIGHT_PAD - 150.0, false)
    };
    let y = Axis::new(vmin, padded_max(vmax), HEIGHT - BOTTOM_PAD, TOP, false);
    let mut doc = Doc::new("Convergence profile");
    doc.axes(&x, &y, "Time (s)", "Average % gap");
    for (i, (name, p)) in profiles.iter().enumerate() {
        let pts: Vec<String> = p
            .iter()
            .map(|&(t, v)| format!("{},{}", n(x.map(t.as_f64())), n(y.map(v.as_f64()))))
            .collect();
        let color = COLORS[i % COLORS.len()];
        let dash = DASHES[i % DASHES.len()];
        doc.raw(&format!(
            r#"<polyline class="profile" data-name="{}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}" points="{}"/>"#,
            escape(name),
            pts.join(" ")
        ));
    }
    let lx = WIDTH - RIGHT_PAD - 140.0;
    for (i, (name, _)) in profiles.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        let dash = DASHES[i % DASHES.len()];
        doc.raw(&format!(r#"<g class="legend-entry" data-name="{}">"#, escape(name)));
        doc.line(
            lx,
            ly,
            lx + 30.0,
            ly,
            &format!(r#"stroke="{color}" stroke-width="2" stroke-dasharray="{dash}""#),
        );
        doc.text(lx + 36.0, ly + 4.0, name, "");
        doc.raw("</g>");
    }
    Ok(doc.finish())
}

pub fn convergence_sidecar<S: Scalar>(profiles: &[(String, Vec<(S, S)>)]) -> Result<String, ReportError> {
    check_grids(profiles)?;
    let mut header = vec!["t".to_string()];
    header.extend(profiles.iter().map(|(name, _)| name.clone()));
    let mut rows = vec![header];
    for (k, &(t, _)) in profiles[0].1.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(profiles.iter().map(|(_, p)| p[k].1.to_string()));
        rows.push(row);
    }
    Ok(csv_string(rows))
}

/// Indices of the groups in the main panel and in the second panel.
pub fn split_panels<S: Scalar>(groups: &[(String, BoxplotStats<S>)]) -> (Vec<usize>, Vec<usize>) {
    let mut main = Vec::new();
    let mut second = Vec::new();
    for (i, (_, g)) in groups.iter().enumerate() {
        let others = groups
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (_, o))| o.upper_whisker.as_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        if others.is_finite() && g.median.as_f64() > PANEL_SPLIT_FACTOR * others {
            second.push(i);
        } else {
            main.push(i);
        }
    }
    if main.is_empty() {
        return (second, Vec::new());
    }
    (main, second)
}

fn draw_panel<S: Scalar>(
    doc: &mut Doc,
    groups: &[(String, BoxplotStats<S>)],
    members: &[usize],
    px_left: f64,
    px_right: f64,
    panel: usize,
) {
    let lo = members
        .iter()
        .flat_map(|&i| {
            let g = &groups[i].1;
            std::iter::once(g.lower_whisker.as_f64()).chain(g.outliers.iter().map(|v| v.as_f64()))
        })
        .fold(0.0f64, f64::min);
    let hi = members
        .iter()
        .flat_map(|&i| {
            let g = &groups[i].1;
            std::iter::once(g.upper_whisker.as_f64()).chain(g.outliers.iter().map(|v| v.as_f64()))
        })
        .fold(0.0f64, f64::max);
    let y = Axis::new(lo, padded_max(hi), HEIGHT - BOTTOM_PAD, TOP, false);
    let x = Axis::new(0.0, members.len() as f64, px_left, px_right, false);
    doc.raw(&format!(r#"<g class="panel" data-panel="{panel}">"#));
    doc.raw(&format!(
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{b}" x2="{l}" y2="{t}"/></g>"#,
        l = n(px_left),
        r = n(px_right),
        b = n(HEIGHT - BOTTOM_PAD),
        t = n(TOP)
    ));
    for t in y.ticks() {
        let py = y.map(t);
        doc.line(px_left - 5.0, py, px_left, py, r#"stroke="black""#);
        doc.text(px_left - 8.0, py + 4.0, &super::svg::tick_label(t), r#"text-anchor="end""#);
    }
    let slot = (px_right - px_left) / members.len() as f64;
    let half = (slot * 0.3).min(30.0);
    for (k, &i) in members.iter().enumerate() {
        let (name, g) = &groups[i];
        let cx = x.map(k as f64 + 0.5);
        let color = COLORS[i % COLORS.len()];
        let (q1, q3) = (y.map(g.q1.as_f64()), y.map(g.q3.as_f64()));
        doc.raw(&format!(r#"<g class="box" data-name="{}">"#, escape(name)));
        doc.line(cx, y.map(g.lower_whisker.as_f64()), cx, q1, r#"class="whisker" stroke="black""#);
        doc.line(cx, q3, cx, y.map(g.upper_whisker.as_f64()), r#"class="whisker" stroke="black""#);
        for w in [g.lower_whisker, g.upper_whisker] {
            let wy = y.map(w.as_f64());
            doc.line(cx - half / 2.0, wy, cx + half / 2.0, wy, r#"class="whisker-cap" stroke="black""#);
        }
        doc.raw(&format!(
            r#"<rect class="iqr" x="{}" y="{}" width="{}" height="{}" fill="{color}" fill-opacity="0.3" stroke="black"/>"#,
            n(cx - half),
            n(q3),
            n(2.0 * half),
            n(q1 - q3)
        ));
        let my = y.map(g.median.as_f64());
        doc.line(cx - half, my, cx + half, my, r#"class="median" stroke="black" stroke-width="3""#);
        for o in &g.outliers {
            doc.raw(&format!(
                r#"<circle class="outlier" cx="{}" cy="{}" r="3" fill="none" stroke="black"/>"#,
                n(cx),
                n(y.map(o.as_f64()))
            ));
        }
        doc.text(cx, HEIGHT - BOTTOM_PAD + 18.0, name, r#"text-anchor="middle""#);
        doc.raw("</g>");
    }
    doc.raw("</g>");
}

/// Box-and-whisker glyphs; groups that dwarf the rest get their own panel and y axis.
pub fn render_boxplots<S: Scalar>(groups: &[(String, BoxplotStats<S>)]) -> String {
    let mut doc = Doc::new("Boxplots");
    if groups.is_empty() {
        return doc.finish();
    }
    let (main, second) = split_panels(groups);
    let right = WIDTH - RIGHT_PAD;
    if second.is_empty() {
        draw_panel(&mut doc, groups, &main, LEFT, right, 1);
    } else {
        let total = (main.len() + second.len()) as f64;
        let usable = right - LEFT - 70.0;
        let w1 = usable * main.len() as f64 / total;
        draw_panel(&mut doc, groups, &main, LEFT, LEFT + w1, 1);
        draw_panel(&mut doc, groups, &second, LEFT + w1 + 70.0, right, 2);
    }
    let (cx, cy) = (LEFT - 48.0, (TOP + HEIGHT - BOTTOM_PAD) / 2.0);
    doc.text(
        cx,
        cy,
        "Average % gap",
        &format!(r#"class="y-label" text-anchor="middle" transform="rotate(-90 {} {})""#, n(cx), n(cy)),
    );
    doc.finish()
}

pub fn boxplot_sidecar<S: Scalar>(groups: &[(String, BoxplotStats<S>)]) -> String {
    let (_, second) = split_panels(groups);
    let header = ["name", "n", "lower_whisker", "q1", "median", "q3", "upper_whisker", "outliers", "panel"];
    let mut rows = vec![header.iter().map(|h| h.to_string()).collect::<Vec<_>>()];
    for (i, (name, g)) in groups.iter().enumerate() {
        let outliers: Vec<String> = g.outliers.iter().map(|o| o.to_string()).collect();
        rows.push(vec![
            name.clone(),
            g.n.to_string(),
            g.lower_whisker.to_string(),
            g.q1.to_string(),
            g.median.to_string(),
            g.q3.to_string(),
            g.upper_whisker.to_string(),
            outliers.join(";"),
            if second.contains(&i) { "2" } else { "1" }.to_string(),
        ]);
    }
    csv_string(rows)
}
