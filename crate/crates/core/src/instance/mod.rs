//! CVRP instances, solutions and the best-known-solution registry.
//!
//! Node identifiers are 1-based everywhere in the public API, matching the
//! TSPLIB file convention. Costs are `f64`; under [`EdgeWeightKind::RoundedEuclidean`]
//! every distance is an integer, so sums are exact.

mod bks;
mod fetch;
mod solution;
mod tsplib;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bks::{bks_lookup, BksEntry, BksRegistry};
pub use fetch::{fetch_instances, FetchError, FetchOptions, FetchedInstance, DEFAULT_SOURCE_URL};
pub use solution::{
    parse_solution, solution_cost, validate_solution, ParsedSolution, Solution, SolutionNumbering,
    SolutionWarning, ValidationReport, Violation, ViolationKind,
};
pub use tsplib::parse_instance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: malformed header: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("line {line}: missing {section}")]
    MissingSection { line: usize, section: String },
    #[error("line {line}: node {node} demand {demand} exceeds capacity {capacity}")]
    DemandExceedsCapacity {
        line: usize,
        node: usize,
        demand: u64,
        capacity: u64,
    },
    #[error("line {line}: duplicate node id {id}")]
    DuplicateNodeId { line: usize, id: usize },
    #[error("line {line}: {detail}")]
    MalformedSection { line: usize, detail: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("line {line}: malformed route line: {detail}")]
    MalformedRouteLine { line: usize, detail: String },
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
    #[error("registry: {0}")]
    Registry(String),
}

/// How edge costs are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeWeightKind {
    /// Euclidean distance rounded to the nearest integer, ties up (`EUC_2D`).
    RoundedEuclidean,
    /// Unrounded Euclidean distance (`EXACT_2D`).
    ExactEuclidean,
    /// Full symmetric matrix given in the file (`EXPLICIT`).
    ExplicitMatrix,
}

impl EdgeWeightKind {
    pub fn tsplib_keyword(self) -> &'static str {
        match self {
            EdgeWeightKind::RoundedEuclidean => "EUC_2D",
            EdgeWeightKind::ExactEuclidean => "EXACT_2D",
            EdgeWeightKind::ExplicitMatrix => "EXPLICIT",
        }
    }
}

impl fmt::Display for EdgeWeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tsplib_keyword())
    }
}

/// A located node. `id` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// Raw fields of an instance, validated by [`Instance::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceParts {
    pub name: String,
    pub capacity: u64,
    pub depot_id: usize,
    pub edge_weight_kind: EdgeWeightKind,
    /// Coordinates indexed by `id - 1`.
    pub coords: Option<Vec<(f64, f64)>>,
    /// Demands indexed by `id - 1`; its length is the dimension.
    pub demands: Vec<u64>,
    /// Row-major `dimension × dimension` matrix, required for explicit weights.
    pub matrix: Option<Vec<f64>>,
    /// Header keywords the parser does not interpret, in file order.
    pub metadata: Vec<(String, String)>,
}

/// An immutable, validated CVRP instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    parts: InstanceParts,
}

impl Instance {
    pub fn new(parts: InstanceParts) -> Result<Self, InstanceError> {
        let dim = parts.demands.len();
        if dim < 2 {
            return Err(InstanceError::Invalid(format!("dimension {dim} < 2")));
        }
        if parts.name.trim().is_empty() || parts.name.contains(['\n', '\r']) {
            return Err(InstanceError::Invalid("name must be a non-empty single line".into()));
        }
        if parts.capacity == 0 {
            return Err(InstanceError::Invalid("capacity must be positive".into()));
        }
        if parts.depot_id == 0 || parts.depot_id > dim {
            return Err(InstanceError::Invalid(format!(
                "depot id {} outside 1..={dim}",
                parts.depot_id
            )));
        }
        for (idx, &d) in parts.demands.iter().enumerate() {
            let id = idx + 1;
            if id == parts.depot_id {
                if d != 0 {
                    return Err(InstanceError::Invalid(format!("depot demand {d} != 0")));
                }
            } else if d == 0 {
                return Err(InstanceError::Invalid(format!("customer {id} has zero demand")));
            } else if d > parts.capacity {
                return Err(InstanceError::DemandExceedsCapacity {
                    line: 0,
                    node: id,
                    demand: d,
                    capacity: parts.capacity,
                });
            }
        }
        if let Some(coords) = &parts.coords {
            if coords.len() != dim {
                return Err(InstanceError::Invalid(format!(
                    "{} coordinates for dimension {dim}",
                    coords.len()
                )));
            }
            if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(InstanceError::Invalid("non-finite coordinate".into()));
            }
        }
        match parts.edge_weight_kind {
            EdgeWeightKind::ExplicitMatrix => {
                let m = parts.matrix.as_ref().ok_or_else(|| {
                    InstanceError::Invalid("explicit weights require a matrix".into())
                })?;
                if m.len() != dim * dim {
                    return Err(InstanceError::Invalid(format!(
                        "matrix has {} entries, expected {}",
                        m.len(),
                        dim * dim
                    )));
                }
                for i in 0..dim {
                    if m[i * dim + i] != 0.0 {
                        return Err(InstanceError::Invalid(format!("nonzero diagonal at {}", i + 1)));
                    }
                    for j in 0..dim {
                        let v = m[i * dim + j];
                        if !(v.is_finite() && v >= 0.0) {
                            return Err(InstanceError::Invalid(format!(
                                "invalid matrix entry ({}, {})",
                                i + 1,
                                j + 1
                            )));
                        }
                        if v != m[j * dim + i] {
                            return Err(InstanceError::Invalid(format!(
                                "asymmetric matrix at ({}, {})",
                                i + 1,
                                j + 1
                            )));
                        }
                    }
                }
            }
            EdgeWeightKind::RoundedEuclidean | EdgeWeightKind::ExactEuclidean => {
                if parts.coords.is_none() {
                    return Err(InstanceError::Invalid(
                        "euclidean weights require coordinates".into(),
                    ));
                }
            }
        }
        Ok(Instance { parts })
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    /// Number of nodes including the depot.
    pub fn dimension(&self) -> usize {
        self.parts.demands.len()
    }

    pub fn num_customers(&self) -> usize {
        self.dimension() - 1
    }

    pub fn capacity(&self) -> u64 {
        self.parts.capacity
    }

    pub fn depot_id(&self) -> usize {
        self.parts.depot_id
    }

    pub fn edge_weight_kind(&self) -> EdgeWeightKind {
        self.parts.edge_weight_kind
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.parts.metadata
    }

    pub fn parts(&self) -> &InstanceParts {
        &self.parts
    }

    pub fn into_parts(self) -> InstanceParts {
        self.parts
    }

    pub fn is_valid_node(&self, id: usize) -> bool {
        (1..=self.dimension()).contains(&id)
    }

    pub fn is_customer(&self, id: usize) -> bool {
        self.is_valid_node(id) && id != self.parts.depot_id
    }

    /// Customer ids in ascending order.
    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.dimension()).filter(move |&id| id != self.parts.depot_id)
    }

    pub fn nodes(&self) -> Option<Vec<Node>> {
        self.parts.coords.as_ref().map(|c| {
            c.iter()
                .enumerate()
                .map(|(i, &(x, y))| Node { id: i + 1, x, y })
                .collect()
        })
    }

    pub fn demand(&self, id: usize) -> Result<u64, InstanceError> {
        if !self.is_valid_node(id) {
            return Err(InstanceError::UnknownNode(id));
        }
        Ok(self.parts.demands[id - 1])
    }

    pub fn demands(&self) -> &[u64] {
        &self.parts.demands
    }

    pub fn total_demand(&self) -> u64 {
        self.parts.demands.iter().sum()
    }

    /// Edge cost between two nodes under the instance's convention.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64, InstanceError> {
        for id in [i, j] {
            if !self.is_valid_node(id) {
                return Err(InstanceError::UnknownNode(id));
            }
        }
        Ok(self.distance_by_index(i - 1, j - 1))
    }

    /// Same as [`Instance::distance`] with 0-based indices and no bounds check
    /// beyond the slice access.
    pub(crate) fn distance_by_index(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        match self.parts.edge_weight_kind {
            EdgeWeightKind::ExplicitMatrix => {
                let dim = self.dimension();
                self.parts.matrix.as_ref().expect("validated")[a * dim + b]
            }
            kind => {
                let coords = self.parts.coords.as_ref().expect("validated");
                let (xa, ya) = coords[a];
                let (xb, yb) = coords[b];
                let d = (xa - xb).hypot(ya - yb);
                if kind == EdgeWeightKind::RoundedEuclidean {
                    nint(d)
                } else {
                    d
                }
            }
        }
    }

    /// Dense row-major matrix over 0-based node indices.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.dimension();
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = self.distance_by_index(a, b);
                data[a * n + b] = d;
                data[b * n + a] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    /// TSPLIB text; [`parse_instance`] of the result reproduces `self`.
    pub fn to_tsplib(&self) -> String {
        tsplib::write_instance(self)
    }
}

/// Nearest integer with ties rounded up, the TSPLIB `nint` convention.
pub fn nint(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Precomputed symmetric distances over 0-based node indices.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::euclidean;
    use super::*;

    #[test]
    fn rounded_euclidean_distances() {
        let inst = euclidean("t", &[(3.0, 4.0), (1.0, 1.0)], &[1, 1], 10);
        assert_eq!(inst.distance(1, 2).unwrap(), 5.0);
        assert_eq!(inst.distance(1, 3).unwrap(), 1.0);
        assert_eq!(inst.distance(2, 1).unwrap(), 5.0);
        assert_eq!(inst.distance(3, 3).unwrap(), 0.0);
        assert_eq!(inst.distance(1, 4), Err(InstanceError::UnknownNode(4)));
        assert_eq!(inst.distance(0, 1), Err(InstanceError::UnknownNode(0)));
    }

    #[test]
    fn nint_ties_round_up() {
        assert_eq!(nint(2.5), 3.0);
        assert_eq!(nint(2.4999), 2.0);
        assert_eq!(nint(0.0), 0.0);
    }

    #[test]
    fn exact_euclidean_is_unrounded() {
        let mut parts = euclidean("t", &[(1.0, 1.0)], &[1], 10).into_parts();
        parts.edge_weight_kind = EdgeWeightKind::ExactEuclidean;
        let inst = Instance::new(parts).unwrap();
        assert!((inst.distance(1, 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn explicit_matrix_lookup() {
        let m = vec![0.0, 3.0, 4.0, 3.0, 0.0, 7.0, 4.0, 7.0, 0.0];
        let inst = Instance::new(InstanceParts {
            name: "m".into(),
            capacity: 5,
            depot_id: 1,
            edge_weight_kind: EdgeWeightKind::ExplicitMatrix,
            coords: None,
            demands: vec![0, 1, 1],
            matrix: Some(m),
            metadata: vec![],
        })
        .unwrap();
        assert_eq!(inst.distance(2, 3).unwrap(), 7.0);
        assert_eq!(inst.distance(3, 2).unwrap(), 7.0);
    }

    #[test]
    fn invariants_rejected() {
        let base = euclidean("t", &[(1.0, 0.0)], &[3], 5).into_parts();

        let mut p = base.clone();
        p.demands[1] = 6;
        assert!(matches!(
            Instance::new(p),
            Err(InstanceError::DemandExceedsCapacity { node: 2, .. })
        ));

        let mut p = base.clone();
        p.demands[0] = 1;
        assert!(Instance::new(p).is_err());

        let mut p = base.clone();
        p.demands[1] = 0;
        assert!(Instance::new(p).is_err());

        let mut p = base.clone();
        p.demands.truncate(1);
        p.coords.as_mut().unwrap().truncate(1);
        assert!(Instance::new(p).is_err());

        let mut p = base;
        p.edge_weight_kind = EdgeWeightKind::ExplicitMatrix;
        p.matrix = Some(vec![0.0, 1.0, 2.0, 0.0]);
        assert!(Instance::new(p).is_err(), "asymmetric matrix");
    }
}
