use std::collections::HashSet;
use std::fmt::Write as _;

use super::{EdgeWeightKind, Instance, InstanceError, InstanceParts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    NodeCoord,
    Demand,
    Depot,
    EdgeWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MatrixFormat {
    Full,
    LowerRow,
    LowerDiagRow,
    UpperRow,
    UpperDiagRow,
}

impl MatrixFormat {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "FULL_MATRIX" => MatrixFormat::Full,
            "LOWER_ROW" => MatrixFormat::LowerRow,
            "LOWER_DIAG_ROW" => MatrixFormat::LowerDiagRow,
            "UPPER_ROW" => MatrixFormat::UpperRow,
            "UPPER_DIAG_ROW" => MatrixFormat::UpperDiagRow,
            _ => return None,
        })
    }

    fn entry_count(self, n: usize) -> usize {
        match self {
            MatrixFormat::Full => n * n,
            MatrixFormat::LowerRow | MatrixFormat::UpperRow => n * (n - 1) / 2,
            MatrixFormat::LowerDiagRow | MatrixFormat::UpperDiagRow => n * (n + 1) / 2,
        }
    }

    /// (row, col) pairs in file order.
    fn positions(self, n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.entry_count(n));
        for i in 0..n {
            let cols: Box<dyn Iterator<Item = usize>> = match self {
                MatrixFormat::Full => Box::new(0..n),
                MatrixFormat::LowerRow => Box::new(0..i),
                MatrixFormat::LowerDiagRow => Box::new(0..=i),
                MatrixFormat::UpperRow => Box::new(i + 1..n),
                MatrixFormat::UpperDiagRow => Box::new(i..n),
            };
            out.extend(cols.map(|j| (i, j)));
        }
        out
    }
}

fn section_keyword(token: &str) -> Option<Section> {
    Some(match token {
        "NODE_COORD_SECTION" => Section::NodeCoord,
        "DEMAND_SECTION" => Section::Demand,
        "DEPOT_SECTION" => Section::Depot,
        "EDGE_WEIGHT_SECTION" => Section::EdgeWeight,
        _ => return None,
    })
}

fn header_err(line: usize, detail: impl Into<String>) -> InstanceError {
    InstanceError::MalformedHeader {
        line,
        detail: detail.into(),
    }
}

fn section_err(line: usize, detail: impl Into<String>) -> InstanceError {
    InstanceError::MalformedSection {
        line,
        detail: detail.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, InstanceError> {
    tok.parse()
        .map_err(|_| section_err(line, format!("invalid {what} {tok:?}")))
}

/// Parses a TSPLIB-style CVRP file.
///
/// Recognised header keys are `NAME`, `TYPE` (must be `CVRP`), `DIMENSION`,
/// `CAPACITY`, `EDGE_WEIGHT_TYPE` (`EUC_2D`, `EXACT_2D`, `EXPLICIT`) and
/// `EDGE_WEIGHT_FORMAT`. Every other key is kept verbatim as metadata.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut name: Option<String> = None;
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<u64> = None;
    let mut kind: Option<EdgeWeightKind> = None;
    let mut format: Option<MatrixFormat> = None;
    let mut metadata: Vec<(String, String)> = Vec::new();
    let mut seen_keys: HashSet<String> = HashSet::new();

    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut coord_lines: Vec<usize> = Vec::new();
    let mut demands: Vec<Option<u64>> = Vec::new();
    let mut demand_lines: Vec<usize> = Vec::new();
    let mut depots: Vec<usize> = Vec::new();
    let mut depot_closed = false;
    let mut weights: Vec<f64> = Vec::new();
    let mut weight_line = 0;
    let mut seen_sections: HashSet<&'static str> = HashSet::new();

    let mut section = Section::Header;
    let mut last_line = 0;
    let mut saw_eof = false;

    let dim_for = |dimension: Option<usize>, line: usize| {
        dimension.ok_or_else(|| InstanceError::MissingSection {
            line,
            section: "DIMENSION before data sections".into(),
        })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        let numeric = first.parse::<f64>().is_ok();

        if !numeric {
            if first == "EOF" {
                saw_eof = true;
                break;
            }
            let keyword = first.trim_end_matches(':');
            if let Some(s) = section_keyword(keyword) {
                let tag = match s {
                    Section::NodeCoord => "NODE_COORD_SECTION",
                    Section::Demand => "DEMAND_SECTION",
                    Section::Depot => "DEPOT_SECTION",
                    Section::EdgeWeight => "EDGE_WEIGHT_SECTION",
                    Section::Header => unreachable!(),
                };
                if !seen_sections.insert(tag) {
                    return Err(section_err(line_no, format!("repeated {tag}")));
                }
                let n = dim_for(dimension, line_no)?;
                match s {
                    Section::NodeCoord => coords = vec![None; n],
                    Section::Demand => demands = vec![None; n],
                    Section::EdgeWeight => weight_line = line_no,
                    _ => {}
                }
                section = s;
                continue;
            }
            // Header line anywhere outside a numeric section body.
            let (key, value) = match line.split_once(':') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => return Err(header_err(line_no, format!("expected `KEY : VALUE`, got {line:?}"))),
            };
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(header_err(line_no, format!("invalid key {key:?}")));
            }
            if !seen_keys.insert(key.to_string()) && key != "COMMENT" {
                return Err(header_err(line_no, format!("duplicate key {key}")));
            }
            section = Section::Header;
            match key {
                "NAME" => {
                    if value.is_empty() {
                        return Err(header_err(line_no, "empty NAME"));
                    }
                    name = Some(value.to_string());
                }
                "TYPE" => {
                    if value != "CVRP" {
                        return Err(header_err(line_no, format!("unsupported TYPE {value}")));
                    }
                }
                "DIMENSION" => {
                    let d: usize = value
                        .parse()
                        .map_err(|_| header_err(line_no, format!("invalid DIMENSION {value:?}")))?;
                    if d < 2 {
                        return Err(header_err(line_no, format!("DIMENSION {d} < 2")));
                    }
                    dimension = Some(d);
                }
                "CAPACITY" => {
                    let q: u64 = value
                        .parse()
                        .map_err(|_| header_err(line_no, format!("invalid CAPACITY {value:?}")))?;
                    if q == 0 {
                        return Err(header_err(line_no, "CAPACITY must be positive"));
                    }
                    capacity = Some(q);
                }
                "EDGE_WEIGHT_TYPE" => {
                    kind = Some(match value {
                        "EUC_2D" => EdgeWeightKind::RoundedEuclidean,
                        "EXACT_2D" => EdgeWeightKind::ExactEuclidean,
                        "EXPLICIT" => EdgeWeightKind::ExplicitMatrix,
                        other => {
                            return Err(header_err(
                                line_no,
                                format!("unsupported EDGE_WEIGHT_TYPE {other}"),
                            ))
                        }
                    });
                }
                "EDGE_WEIGHT_FORMAT" => {
                    format = Some(MatrixFormat::parse(value).ok_or_else(|| {
                        header_err(line_no, format!("unsupported EDGE_WEIGHT_FORMAT {value}"))
                    })?);
                }
                _ => metadata.push((key.to_string(), value.to_string())),
            }
            continue;
        }

        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Header => {
                return Err(header_err(line_no, "numeric line outside a data section"));
            }
            Section::NodeCoord => {
                if toks.len() != 3 {
                    return Err(section_err(line_no, "expected `id x y`"));
                }
                let id: usize = parse_num(toks[0], line_no, "node id")?;
                let x: f64 = parse_num(toks[1], line_no, "x coordinate")?;
                let y: f64 = parse_num(toks[2], line_no, "y coordinate")?;
                let n = coords.len();
                let slot = id
                    .checked_sub(1)
                    .and_then(|i| coords.get_mut(i))
                    .ok_or_else(|| section_err(line_no, format!("node id {id} outside 1..={n}")))?;
                if slot.is_some() {
                    return Err(InstanceError::DuplicateNodeId { line: line_no, id });
                }
                *slot = Some((x, y));
                coord_lines.push(line_no);
            }
            Section::Demand => {
                if toks.len() != 2 {
                    return Err(section_err(line_no, "expected `id demand`"));
                }
                let id: usize = parse_num(toks[0], line_no, "node id")?;
                let d: u64 = parse_num(toks[1], line_no, "demand")?;
                let n = demands.len();
                let slot = id
                    .checked_sub(1)
                    .and_then(|i| demands.get_mut(i))
                    .ok_or_else(|| section_err(line_no, format!("node id {id} outside 1..={n}")))?;
                if slot.is_some() {
                    return Err(InstanceError::DuplicateNodeId { line: line_no, id });
                }
                *slot = Some(d);
                if demand_lines.len() < n {
                    demand_lines.resize(n, 0);
                }
                demand_lines[id - 1] = line_no;
            }
            Section::Depot => {
                for t in toks {
                    let v: i64 = parse_num(t, line_no, "depot id")?;
                    if depot_closed {
                        return Err(section_err(line_no, "data after DEPOT_SECTION terminator"));
                    }
                    if v == -1 {
                        depot_closed = true;
                    } else if v <= 0 {
                        return Err(section_err(line_no, format!("invalid depot id {v}")));
                    } else {
                        depots.push(v as usize);
                    }
                }
            }
            Section::EdgeWeight => {
                for t in toks {
                    weights.push(parse_num(t, line_no, "edge weight")?);
                }
            }
        }
    }

    let end = last_line.max(1);
    let missing = |section: &str| InstanceError::MissingSection {
        line: end,
        section: section.to_string(),
    };
    let name = name.ok_or_else(|| missing("NAME"))?;
    let dimension = dimension.ok_or_else(|| missing("DIMENSION"))?;
    let capacity = capacity.ok_or_else(|| missing("CAPACITY"))?;
    let kind = kind.ok_or_else(|| missing("EDGE_WEIGHT_TYPE"))?;
    if !saw_eof {
        log::debug!("instance {name}: no EOF marker");
    }

    if !seen_sections.contains("DEMAND_SECTION") {
        return Err(missing("DEMAND_SECTION"));
    }
    if !seen_sections.contains("DEPOT_SECTION") {
        return Err(missing("DEPOT_SECTION"));
    }
    let demands: Vec<u64> = demands
        .iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| missing(&format!("demand for node {}", i + 1))))
        .collect::<Result<_, _>>()?;
    let depot_id = match depots.as_slice() {
        [d] => *d,
        [] => return Err(missing("depot id in DEPOT_SECTION")),
        _ => return Err(section_err(end, format!("expected exactly one depot, got {}", depots.len()))),
    };
    if depot_id > dimension {
        return Err(section_err(end, format!("depot id {depot_id} outside 1..={dimension}")));
    }
    if demands[depot_id - 1] != 0 {
        return Err(section_err(
            demand_lines.get(depot_id - 1).copied().unwrap_or(end),
            "depot demand must be 0",
        ));
    }
    for (i, &d) in demands.iter().enumerate() {
        let id = i + 1;
        if id == depot_id {
            continue;
        }
        let line = demand_lines.get(i).copied().unwrap_or(end);
        if d > capacity {
            return Err(InstanceError::DemandExceedsCapacity {
                line,
                node: id,
                demand: d,
                capacity,
            });
        }
        if d == 0 {
            return Err(section_err(line, format!("customer {id} has zero demand")));
        }
    }

    let coords = if seen_sections.contains("NODE_COORD_SECTION") {
        Some(
            coords
                .iter()
                .enumerate()
                .map(|(i, c)| c.ok_or_else(|| missing(&format!("coordinates for node {}", i + 1))))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };

    let matrix = match kind {
        EdgeWeightKind::ExplicitMatrix => {
            if !seen_sections.contains("EDGE_WEIGHT_SECTION") {
                return Err(missing("EDGE_WEIGHT_SECTION"));
            }
            let format = format.unwrap_or(MatrixFormat::Full);
            let expected = format.entry_count(dimension);
            if weights.len() != expected {
                return Err(section_err(
                    weight_line,
                    format!("EDGE_WEIGHT_SECTION has {} entries, expected {expected}", weights.len()),
                ));
            }
            let mut m = vec![0.0; dimension * dimension];
            if format == MatrixFormat::Full {
                m = weights;
            } else {
                for ((i, j), w) in format.positions(dimension).into_iter().zip(weights) {
                    m[i * dimension + j] = w;
                    m[j * dimension + i] = w;
                }
            }
            Some(m)
        }
        _ => {
            if coords.is_none() {
                return Err(missing("NODE_COORD_SECTION"));
            }
            None
        }
    };

    Instance::new(InstanceParts {
        name,
        capacity,
        depot_id,
        edge_weight_kind: kind,
        coords,
        demands,
        matrix,
        metadata,
    })
    .map_err(|e| match e {
        InstanceError::Invalid(detail) => section_err(end, detail),
        other => other,
    })
}

pub(super) fn write_instance(inst: &Instance) -> String {
    let p = inst.parts();
    let n = inst.dimension();
    let mut out = String::new();
    let _ = writeln!(out, "NAME : {}", p.name);
    for (k, v) in &p.metadata {
        let _ = writeln!(out, "{k} : {v}");
    }
    out.push_str("TYPE : CVRP\n");
    let _ = writeln!(out, "DIMENSION : {n}");
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : {}", p.edge_weight_kind.tsplib_keyword());
    if p.edge_weight_kind == EdgeWeightKind::ExplicitMatrix {
        out.push_str("EDGE_WEIGHT_FORMAT : FULL_MATRIX\n");
    }
    let _ = writeln!(out, "CAPACITY : {}", p.capacity);
    if let Some(coords) = &p.coords {
        out.push_str("NODE_COORD_SECTION\n");
        for (i, (x, y)) in coords.iter().enumerate() {
            let _ = writeln!(out, "{} {} {}", i + 1, x, y);
        }
    }
    if let Some(m) = &p.matrix {
        out.push_str("EDGE_WEIGHT_SECTION\n");
        for row in m.chunks(n) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out.push_str("DEMAND_SECTION\n");
    for (i, d) in p.demands.iter().enumerate() {
        let _ = writeln!(out, "{} {}", i + 1, d);
    }
    out.push_str("DEPOT_SECTION\n");
    let _ = writeln!(out, "{}", p.depot_id);
    out.push_str("-1\nEOF\n");
    out
}
