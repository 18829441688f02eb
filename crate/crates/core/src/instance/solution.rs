use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{Instance, InstanceError};

/// A set of routes. The depot is implicit at both ends of every route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Vec<usize>>,
    pub cost: f64,
    #[serde(default)]
    pub source: String,
}

impl Solution {
    /// Builds a solution and fills in its cost.
    pub fn with_cost(
        inst: &Instance,
        routes: Vec<Vec<usize>>,
        source: impl Into<String>,
    ) -> Result<Self, InstanceError> {
        let mut s = Solution {
            routes,
            cost: 0.0,
            source: source.into(),
        };
        s.cost = solution_cost(inst, &s)?;
        Ok(s)
    }

    /// CVRPLIB-style text using 1-based node ids.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, r) in self.routes.iter().enumerate() {
            let ids: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "Route #{}: {}", k + 1, ids.join(" "));
        }
        let _ = writeln!(out, "Cost {}", self.cost);
        out
    }
}

/// Sum of depot → c1 → … → ck → depot over all routes.
pub fn solution_cost(inst: &Instance, sol: &Solution) -> Result<f64, InstanceError> {
    let mut total = 0.0;
    for route in &sol.routes {
        total += route_cost(inst, route)?;
    }
    Ok(total)
}

pub(crate) fn route_cost(inst: &Instance, route: &[usize]) -> Result<f64, InstanceError> {
    let depot = inst.depot_id();
    let mut prev = depot;
    let mut cost = 0.0;
    for &c in route {
        cost += inst.distance(prev, c)?;
        prev = c;
    }
    if !route.is_empty() {
        cost += inst.distance(prev, depot)?;
    }
    Ok(cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    DuplicateCustomer,
    MissingCustomer,
    CapacityExceeded,
    UnknownNode,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::DuplicateCustomer => "duplicate-customer",
            ViolationKind::MissingCustomer => "missing-customer",
            ViolationKind::CapacityExceeded => "capacity-exceeded",
            ViolationKind::UnknownNode => "unknown-node",
        })
    }
}

/// One feasibility violation. Route indices are 1-based like the file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    DuplicateCustomer { customer: usize, occurrences: usize },
    MissingCustomer { customer: usize },
    CapacityExceeded { route: usize, load: u64, capacity: u64 },
    /// Ids outside the instance, and the depot appearing inside a route body.
    UnknownNode { route: usize, node: usize },
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::DuplicateCustomer { .. } => ViolationKind::DuplicateCustomer,
            Violation::MissingCustomer { .. } => ViolationKind::MissingCustomer,
            Violation::CapacityExceeded { .. } => ViolationKind::CapacityExceeded,
            Violation::UnknownNode { .. } => ViolationKind::UnknownNode,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.kind())?;
        match self {
            Violation::DuplicateCustomer { customer, occurrences } => {
                write!(f, "customer {customer} visited {occurrences} times")
            }
            Violation::MissingCustomer { customer } => write!(f, "customer {customer} not visited"),
            Violation::CapacityExceeded { route, load, capacity } => {
                write!(f, "route #{route} load {load} > capacity {capacity}")
            }
            Violation::UnknownNode { route, node } => {
                write!(f, "route #{route} contains node {node} which is not a customer")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub recomputed_cost: f64,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} (recomputed cost {})",
            if self.feasible { "feasible" } else { "infeasible" },
            self.recomputed_cost
        )?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Checks coverage and capacity, collecting every violation.
///
/// Nodes that are not customers are skipped when recomputing the cost, so the
/// reported cost covers the legs between valid customers only.
pub fn validate_solution(inst: &Instance, sol: &Solution) -> ValidationReport {
    let mut violations = Vec::new();
    let mut visits = vec![0usize; inst.dimension() + 1];
    let mut recomputed_cost = 0.0;

    for (r, route) in sol.routes.iter().enumerate() {
        let mut load = 0u64;
        let mut cleaned = Vec::with_capacity(route.len());
        for &node in route {
            if !inst.is_customer(node) {
                violations.push(Violation::UnknownNode { route: r + 1, node });
                continue;
            }
            visits[node] += 1;
            load += inst.demands()[node - 1];
            cleaned.push(node);
        }
        if load > inst.capacity() {
            violations.push(Violation::CapacityExceeded {
                route: r + 1,
                load,
                capacity: inst.capacity(),
            });
        }
        recomputed_cost += route_cost(inst, &cleaned).expect("customers are valid nodes");
    }
    for c in inst.customers() {
        match visits[c] {
            0 => violations.push(Violation::MissingCustomer { customer: c }),
            1 => {}
            k => violations.push(Violation::DuplicateCustomer {
                customer: c,
                occurrences: k,
            }),
        }
    }
    ValidationReport {
        feasible: violations.is_empty(),
        violations,
        recomputed_cost,
    }
}

/// How customer identifiers in a solution file map onto instance nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionNumbering {
    /// Ids are 1-based instance node ids.
    #[default]
    NodeId,
    /// CVRPLIB published solutions: customers numbered 1..n−1 in node order,
    /// skipping the depot (for depot 1 this is node id − 1).
    Cvrplib,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionWarning {
    CostMismatch { declared: f64, recomputed: f64 },
}

impl fmt::Display for SolutionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionWarning::CostMismatch { declared, recomputed } => write!(
                f,
                "cost-mismatch: declared {declared}, recomputed {recomputed} (recomputed kept)"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSolution {
    pub solution: Solution,
    pub declared_cost: Option<f64>,
    pub warnings: Vec<SolutionWarning>,
}

/// Parses `Route #k: c1 c2 …` lines and an optional final `Cost c` line.
///
/// The returned cost is always recomputed; a differing declared cost only
/// produces a [`SolutionWarning::CostMismatch`].
pub fn parse_solution(
    text: &str,
    inst: &Instance,
    numbering: SolutionNumbering,
) -> Result<ParsedSolution, InstanceError> {
    let customers: Vec<usize> = inst.customers().collect();
    let map_id = |raw: usize, line: usize| -> Result<usize, InstanceError> {
        match numbering {
            SolutionNumbering::NodeId => Ok(raw),
            SolutionNumbering::Cvrplib => raw
                .checked_sub(1)
                .and_then(|i| customers.get(i).copied())
                .ok_or_else(|| InstanceError::MalformedRouteLine {
                    line,
                    detail: format!("customer index {raw} outside 1..={}", customers.len()),
                }),
        }
    };

    let mut routes = Vec::new();
    let mut declared_cost = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |detail: &str| InstanceError::MalformedRouteLine {
            line: line_no,
            detail: detail.to_string(),
        };
        if declared_cost.is_some() {
            return Err(bad("content after Cost line"));
        }
        let lower = line.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("cost") {
            let v: f64 = rest
                .trim()
                .parse()
                .map_err(|_| bad("expected `Cost <number>`"))?;
            declared_cost = Some(v);
            continue;
        }
        let rest = lower
            .strip_prefix("route")
            .ok_or_else(|| bad("expected `Route #k: ...` or `Cost c`"))?;
        let (label, body) = rest.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let label = label.trim();
        if !label.starts_with('#') || label[1..].trim().parse::<usize>().is_err() {
            return Err(bad("expected route label `#k`"));
        }
        let ids = body
            .split_whitespace()
            .map(|t| {
                let raw: usize = t.parse().map_err(|_| bad(&format!("invalid customer id {t:?}")))?;
                map_id(raw, line_no)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ids.is_empty() {
            return Err(bad("empty route"));
        }
        routes.push(ids);
    }
    if routes.is_empty() {
        return Err(InstanceError::MalformedRouteLine {
            line: text.lines().count().max(1),
            detail: "no routes".into(),
        });
    }
    let solution = Solution::with_cost(inst, routes, "file")?;
    let mut warnings = Vec::new();
    if let Some(declared) = declared_cost {
        let tol = 1e-6 * solution.cost.abs().max(1.0);
        if (declared - solution.cost).abs() > tol {
            log::warn!(
                "{}: declared cost {declared} differs from recomputed {}",
                inst.name(),
                solution.cost
            );
            warnings.push(SolutionWarning::CostMismatch {
                declared,
                recomputed: solution.cost,
            });
        }
    }
    Ok(ParsedSolution {
        solution,
        declared_cost,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::euclidean;
    use super::*;

    fn fixture() -> Instance {
        // Customers 2..=6 on the x axis, demand 10 each, capacity 30.
        euclidean(
            "line",
            &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (0.0, 4.0), (0.0, 8.0)],
            &[10, 10, 10, 10, 10],
            30,
        )
    }

    #[test]
    fn empty_route_list_costs_zero() {
        let inst = fixture();
        let s = Solution { routes: vec![], cost: 0.0, source: String::new() };
        assert_eq!(solution_cost(&inst, &s).unwrap(), 0.0);
    }

    #[test]
    fn single_route_matches_leg_sum() {
        let inst = euclidean("three", &[(3.0, 4.0), (6.0, 8.0), (0.0, 5.0)], &[1, 1, 1], 10);
        let s = Solution { routes: vec![vec![2, 3, 4]], cost: 0.0, source: String::new() };
        let legs = [(1, 2), (2, 3), (3, 4), (4, 1)];
        let naive: f64 = legs.iter().map(|&(a, b)| inst.distance(a, b).unwrap()).sum();
        assert_eq!(solution_cost(&inst, &s).unwrap(), naive);
        assert_eq!(naive, 5.0 + 5.0 + 7.0 + 5.0);
    }

    #[test]
    fn unknown_node_in_cost() {
        let inst = fixture();
        let s = Solution { routes: vec![vec![2, 99]], cost: 0.0, source: String::new() };
        assert_eq!(solution_cost(&inst, &s), Err(InstanceError::UnknownNode(99)));
    }

    #[test]
    fn feasible_solution_validates() {
        let inst = fixture();
        let s = Solution::with_cost(&inst, vec![vec![2, 3, 4], vec![5, 6]], "t").unwrap();
        let r = validate_solution(&inst, &s);
        assert!(r.feasible, "{r}");
        assert!(r.violations.is_empty());
        assert_eq!(r.recomputed_cost, s.cost);
    }

    #[test]
    fn reports_every_violation() {
        let inst = fixture();
        // customer 5 missing, 2 duplicated, route 1 over capacity, node 1 is the depot.
        let s = Solution { routes: vec![vec![2, 3, 4, 2], vec![6, 1, 77]], cost: 0.0, source: String::new() };
        let r = validate_solution(&inst, &s);
        assert!(!r.feasible);
        assert!(r.violations.contains(&Violation::MissingCustomer { customer: 5 }));
        assert!(r.violations.contains(&Violation::DuplicateCustomer { customer: 2, occurrences: 2 }));
        assert!(r.violations.contains(&Violation::CapacityExceeded { route: 1, load: 40, capacity: 30 }));
        assert!(r.violations.contains(&Violation::UnknownNode { route: 2, node: 1 }));
        assert!(r.violations.contains(&Violation::UnknownNode { route: 2, node: 77 }));
        assert_eq!(r.violations.len(), 5);
    }

    #[test]
    fn capacity_plus_one() {
        let inst = euclidean("cap", &[(1.0, 0.0), (2.0, 0.0)], &[15, 16], 30);
        let s = Solution::with_cost(&inst, vec![vec![2, 3]], "t").unwrap();
        let r = validate_solution(&inst, &s);
        assert_eq!(
            r.violations,
            vec![Violation::CapacityExceeded { route: 1, load: 31, capacity: 30 }]
        );
    }

    #[test]
    fn parse_single_route() {
        let inst = euclidean("pair", &[(3.0, 0.0)], &[1], 5);
        let p = parse_solution("Route #1: 2\nCost 6", &inst, SolutionNumbering::NodeId).unwrap();
        assert_eq!(p.solution.routes, vec![vec![2]]);
        assert!(p.warnings.is_empty());

        let inst2 = euclidean("two", &[(3.0, 0.0), (3.0, 4.0)], &[1, 1], 5);
        let p = parse_solution("Route #1: 2 3\nCost 10", &inst2, SolutionNumbering::NodeId).unwrap();
        assert_eq!(p.solution.routes.len(), 1);
        assert_eq!(p.solution.cost, 12.0);
        assert_eq!(
            p.warnings,
            vec![SolutionWarning::CostMismatch { declared: 10.0, recomputed: 12.0 }]
        );
    }

    #[test]
    fn cost_off_by_one_warns_and_keeps_recomputed() {
        let inst = fixture();
        let p = parse_solution(
            "Route #1: 2 3 4\nRoute #2: 5 6\nCost 23",
            &inst,
            SolutionNumbering::NodeId,
        )
        .unwrap();
        assert_eq!(p.solution.cost, 22.0);
        assert_eq!(p.declared_cost, Some(23.0));
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn parse_errors() {
        let inst = fixture();
        for text in ["", "\n\n", "Route 1: 2", "Route #1:", "Route #1: a", "Tour #1: 2", "Route #1: 2\nCost x"] {
            assert!(
                matches!(
                    parse_solution(text, &inst, SolutionNumbering::NodeId),
                    Err(InstanceError::MalformedRouteLine { .. })
                ),
                "{text:?}"
            );
        }
    }

    #[test]
    fn cvrplib_numbering_skips_depot() {
        let inst = fixture();
        let p = parse_solution("Route #1: 1 2 3\nRoute #2: 4 5\nCost 22", &inst, SolutionNumbering::Cvrplib)
            .unwrap();
        assert_eq!(p.solution.routes, vec![vec![2, 3, 4], vec![5, 6]]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn text_round_trip() {
        let inst = fixture();
        let s = Solution::with_cost(&inst, vec![vec![2, 3, 4], vec![6, 5]], "t").unwrap();
        let p = parse_solution(&s.to_text(), &inst, SolutionNumbering::NodeId).unwrap();
        assert_eq!(p.solution.routes, s.routes);
        assert_eq!(p.solution.cost, s.cost);
        assert!(p.warnings.is_empty());
    }
}
