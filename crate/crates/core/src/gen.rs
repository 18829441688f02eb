//! Seeded generation of CVRP instances in the style of the X benchmark.
//!
//! The generator uses `ChaCha8Rng` seeded with `seed_from_u64(seed)`, so the
//! same [`GenSpec`] gives byte-identical instance files across runs and
//! platforms. All coordinates are integers on the `[0, grid_size]²` grid and
//! customer positions are pairwise distinct and distinct from the depot.
//!
//! Semantics of the knobs:
//!
//! * depot: `central` is the grid midpoint (rounded down), `eccentric` the
//!   corner `(0, 0)`, `random` a uniform grid point.
//! * customers: `uniform-random` draws uniform grid points; `clustered`
//!   draws `n_clusters` seeds uniformly, attaches each customer to a uniformly
//!   chosen seed and places it at an integer offset within
//!   [`GenSpec::cluster_radius`] of that seed, with acceptance probability
//!   `exp(-d / decay)` where `decay = radius / 3`; `mixed` places the first
//!   half of the customers clustered and the rest uniformly.
//! * demands: `unit` is 1; `uniform` draws from `lo..=hi`; `small-large-mix`
//!   picks `1..=10` or `50..=100` with equal probability.
//! * capacity is `ceil(target_route_size × mean demand)`, raised to the
//!   largest single demand.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{EdgeWeightKind, Instance, InstanceParts};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepotPosition {
    #[default]
    Central,
    Eccentric,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CustomerPosition {
    #[default]
    UniformRandom,
    Clustered,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemandKind {
    #[default]
    Unit,
    Uniform { lo: u64, hi: u64 },
    SmallLargeMix,
}

/// Parameters of one generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GenConfig", into = "GenConfig")]
pub struct GenSpec {
    pub n_customers: usize,
    pub depot_position: DepotPosition,
    pub customer_position: CustomerPosition,
    pub n_clusters: usize,
    pub demand: DemandKind,
    pub target_route_size: f64,
    pub grid_size: u32,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n_customers: 20,
            depot_position: DepotPosition::Central,
            customer_position: CustomerPosition::UniformRandom,
            n_clusters: 3,
            demand: DemandKind::Unit,
            target_route_size: 5.0,
            grid_size: 1000,
            seed: 1,
        }
    }
}

/// Flat key = value form of [`GenSpec`] used by config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    n_customers: usize,
    #[serde(default)]
    depot_position: DepotPosition,
    #[serde(default)]
    customer_position: CustomerPosition,
    #[serde(default = "default_clusters")]
    n_clusters: usize,
    #[serde(default = "default_demand_kind")]
    demand_kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demand_lo: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demand_hi: Option<u64>,
    target_route_size: f64,
    #[serde(default = "default_grid")]
    grid_size: u32,
    #[serde(default)]
    seed: u64,
}

fn default_clusters() -> usize {
    3
}
fn default_demand_kind() -> String {
    "unit".into()
}
fn default_grid() -> u32 {
    1000
}

impl TryFrom<GenConfig> for GenSpec {
    type Error = GenError;

    fn try_from(c: GenConfig) -> Result<Self, GenError> {
        let demand = match c.demand_kind.as_str() {
            "unit" => DemandKind::Unit,
            "uniform" => DemandKind::Uniform {
                lo: c.demand_lo.ok_or_else(|| GenError::Config("uniform demand needs demand_lo".into()))?,
                hi: c.demand_hi.ok_or_else(|| GenError::Config("uniform demand needs demand_hi".into()))?,
            },
            "small-large-mix" => DemandKind::SmallLargeMix,
            other => return Err(GenError::Config(format!("unknown demand_kind {other:?}"))),
        };
        let spec = GenSpec {
            n_customers: c.n_customers,
            depot_position: c.depot_position,
            customer_position: c.customer_position,
            n_clusters: c.n_clusters,
            demand,
            target_route_size: c.target_route_size,
            grid_size: c.grid_size,
            seed: c.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<GenSpec> for GenConfig {
    fn from(s: GenSpec) -> Self {
        let (kind, lo, hi) = match s.demand {
            DemandKind::Unit => ("unit", None, None),
            DemandKind::Uniform { lo, hi } => ("uniform", Some(lo), Some(hi)),
            DemandKind::SmallLargeMix => ("small-large-mix", None, None),
        };
        GenConfig {
            n_customers: s.n_customers,
            depot_position: s.depot_position,
            customer_position: s.customer_position,
            n_clusters: s.n_clusters,
            demand_kind: kind.into(),
            demand_lo: lo,
            demand_hi: hi,
            target_route_size: s.target_route_size,
            grid_size: s.grid_size,
            seed: s.seed,
        }
    }
}

impl fmt::Display for DemandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandKind::Unit => f.write_str("unit"),
            DemandKind::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            DemandKind::SmallLargeMix => f.write_str("small-large-mix"),
        }
    }
}

impl fmt::Display for DepotPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepotPosition::Central => "central",
            DepotPosition::Eccentric => "eccentric",
            DepotPosition::Random => "random",
        })
    }
}

impl fmt::Display for CustomerPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CustomerPosition::UniformRandom => "uniform-random",
            CustomerPosition::Clustered => "clustered",
            CustomerPosition::Mixed => "mixed",
        })
    }
}

impl GenSpec {
    /// Parses a TOML config of `key = value` lines.
    pub fn from_config_str(text: &str) -> Result<Self, GenError> {
        toml::from_str(text).map_err(|e| GenError::Config(e.to_string()))
    }

    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InfeasibleSpec(m));
        if self.n_customers == 0 {
            return bad("n_customers must be at least 1".into());
        }
        if !(self.target_route_size.is_finite() && self.target_route_size >= 1.0) {
            return bad(format!("target_route_size {} < 1", self.target_route_size));
        }
        if self.grid_size < 2 {
            return bad(format!("grid_size {} < 2", self.grid_size));
        }
        if self.customer_position != CustomerPosition::UniformRandom && self.n_clusters == 0 {
            return bad("clustered placement needs n_clusters >= 1".into());
        }
        if let DemandKind::Uniform { lo, hi } = self.demand {
            if lo == 0 {
                return bad("demand_lo must be positive".into());
            }
            if lo > hi {
                return bad(format!("demand_lo {lo} > demand_hi {hi}"));
            }
        }
        let side = u64::from(self.grid_size) + 1;
        if (self.n_customers as u64) + 1 > side * side {
            return bad(format!("{} customers do not fit a {side}x{side} grid", self.n_customers));
        }
        Ok(())
    }

    /// Maximum distance between a clustered customer and its seed point.
    ///
    /// This is `grid_size / 10`, enlarged to `ceil(sqrt(2 n / n_clusters))`
    /// when needed so a cluster's disk holds several times its expected load.
    pub fn cluster_radius(&self) -> u32 {
        let k = self.n_clusters.max(1) as f64;
        let crowded = (2.0 * self.n_customers as f64 / k).sqrt().ceil() as u32;
        (self.grid_size / 10).max(crowded).max(1)
    }

    pub fn instance_name(&self) -> String {
        let c = match self.customer_position {
            CustomerPosition::UniformRandom => "R",
            CustomerPosition::Clustered => "C",
            CustomerPosition::Mixed => "RC",
        };
        let d = match self.depot_position {
            DepotPosition::Central => "C",
            DepotPosition::Eccentric => "E",
            DepotPosition::Random => "R",
        };
        format!("gen-{c}-{d}-n{}-s{}", self.n_customers, self.seed)
    }
}

const MAX_ATTEMPTS: usize = 1_000_000;

/// Generates one instance. The depot is node 1, customers are nodes 2..=n+1.
pub fn generate_instance(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g = spec.grid_size as i64;

    let depot = match spec.depot_position {
        DepotPosition::Central => (g / 2, g / 2),
        DepotPosition::Eccentric => (0, 0),
        DepotPosition::Random => (rng.random_range(0..=g), rng.random_range(0..=g)),
    };
    let mut occupied: HashSet<(i64, i64)> = HashSet::new();
    occupied.insert(depot);

    let n = spec.n_customers;
    let n_clustered = match spec.customer_position {
        CustomerPosition::UniformRandom => 0,
        CustomerPosition::Clustered => n,
        CustomerPosition::Mixed => n / 2,
    };
    let seeds: Vec<(i64, i64)> = if n_clustered > 0 {
        (0..spec.n_clusters)
            .map(|_| (rng.random_range(0..=g), rng.random_range(0..=g)))
            .collect()
    } else {
        Vec::new()
    };
    let radius = i64::from(spec.cluster_radius());
    let decay = radius as f64 / 3.0;

    let mut coords = Vec::with_capacity(n + 1);
    coords.push(depot);
    for i in 0..n {
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let p = if i < n_clustered {
                let s = seeds[rng.random_range(0..seeds.len())];
                let dx = rng.random_range(-radius..=radius);
                let dy = rng.random_range(-radius..=radius);
                let d = ((dx * dx + dy * dy) as f64).sqrt();
                let u: f64 = rng.random();
                if d > radius as f64 || u >= (-d / decay).exp() {
                    continue;
                }
                (s.0 + dx, s.1 + dy)
            } else {
                (rng.random_range(0..=g), rng.random_range(0..=g))
            };
            if p.0 < 0 || p.1 < 0 || p.0 > g || p.1 > g || occupied.contains(&p) {
                continue;
            }
            placed = Some(p);
            break;
        }
        let p = placed.ok_or_else(|| {
            GenError::InfeasibleSpec(format!("could not place customer {} without overlap", i + 1))
        })?;
        occupied.insert(p);
        coords.push(p);
    }

    let mut demands = Vec::with_capacity(n + 1);
    demands.push(0u64);
    for _ in 0..n {
        let d = match spec.demand {
            DemandKind::Unit => 1,
            DemandKind::Uniform { lo, hi } => rng.random_range(lo..=hi),
            DemandKind::SmallLargeMix => {
                if rng.random_bool(0.5) {
                    rng.random_range(1..=10)
                } else {
                    rng.random_range(50..=100)
                }
            }
        };
        demands.push(d);
    }
    let total: u64 = demands.iter().sum();
    let max_demand = demands.iter().copied().max().unwrap_or(1);
    let mean = total as f64 / n as f64;
    let raw = spec.target_route_size * mean;
    // Subtracting a hair keeps exact products like 5 × 1.0 from rounding up.
    let capacity = ((raw - 1e-9).ceil() as u64).max(max_demand).max(1);

    let comment = format!(
        "generated depot={} customers={} clusters={} demand={} r={} grid={} seed={}",
        spec.depot_position,
        spec.customer_position,
        spec.n_clusters,
        spec.demand,
        spec.target_route_size,
        spec.grid_size,
        spec.seed
    );
    Instance::new(InstanceParts {
        name: spec.instance_name(),
        capacity,
        depot_id: 1,
        edge_weight_kind: EdgeWeightKind::RoundedEuclidean,
        coords: Some(coords.iter().map(|&(x, y)| (x as f64, y as f64)).collect()),
        demands,
        matrix: None,
        metadata: vec![("COMMENT".into(), comment)],
    })
    .map_err(|e| GenError::InfeasibleSpec(e.to_string()))
}

/// One instance per (size, seed) pair, sizes outermost.
pub fn generate_suite(base: &GenSpec, sizes: &[usize], seeds: &[u64]) -> Result<Vec<Instance>, GenError> {
    if sizes.is_empty() || seeds.is_empty() {
        return Err(GenError::InfeasibleSpec("suite needs at least one size and one seed".into()));
    }
    let mut out = Vec::with_capacity(sizes.len() * seeds.len());
    for &n in sizes {
        for &seed in seeds {
            let spec = GenSpec {
                n_customers: n,
                seed,
                ..base.clone()
            };
            out.push(generate_instance(&spec)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    #[test]
    fn unit_demands_capacity() {
        let spec = GenSpec {
            n_customers: 20,
            demand: DemandKind::Unit,
            target_route_size: 5.0,
            ..GenSpec::default()
        };
        let inst = generate_instance(&spec).unwrap();
        assert_eq!(inst.capacity(), 5);
        assert_eq!(inst.dimension(), 21);
    }

    #[test]
    fn deterministic_bytes() {
        let spec = GenSpec {
            customer_position: CustomerPosition::Mixed,
            depot_position: DepotPosition::Random,
            demand: DemandKind::SmallLargeMix,
            seed: 9,
            ..GenSpec::default()
        };
        let a = generate_instance(&spec).unwrap().to_tsplib();
        let b = generate_instance(&spec).unwrap().to_tsplib();
        assert_eq!(a, b);
        let other = generate_instance(&GenSpec { seed: 10, ..spec }).unwrap().to_tsplib();
        assert_ne!(a, other);
    }

    #[test]
    fn capacity_from_empirical_mean() {
        let spec = GenSpec {
            n_customers: 100,
            demand: DemandKind::Uniform { lo: 1, hi: 10 },
            target_route_size: 10.0,
            seed: 42,
            ..GenSpec::default()
        };
        let text = generate_instance(&spec).unwrap().to_tsplib();
        // Recompute from the emitted demand section.
        let demands: Vec<u64> = text
            .lines()
            .skip_while(|l| *l != "DEMAND_SECTION")
            .skip(1)
            .take_while(|l| *l != "DEPOT_SECTION")
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(demands.len(), 101);
        let customers = &demands[1..];
        assert!(customers.iter().all(|d| (1..=10).contains(d)));
        let mean = customers.iter().sum::<u64>() as f64 / 100.0;
        let capacity: u64 = text
            .lines()
            .find_map(|l| l.strip_prefix("CAPACITY : "))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(capacity, (10.0 * mean).ceil() as u64);
    }

    #[test]
    fn names_and_cardinality() {
        let suite = generate_suite(&GenSpec::default(), &[20, 50], &[1, 2]).unwrap();
        assert_eq!(suite.len(), 4);
        let names: HashSet<&str> = suite.iter().map(|i| i.name()).collect();
        assert_eq!(names.len(), 4);
        for (n, s) in [(20, 1), (20, 2), (50, 1), (50, 2)] {
            let suffix = format!("n{n}-s{s}");
            assert!(names.iter().any(|name| name.ends_with(&suffix)), "{suffix}");
        }
        assert!(matches!(
            generate_suite(&GenSpec::default(), &[], &[1]),
            Err(GenError::InfeasibleSpec(_))
        ));
        assert!(generate_suite(&GenSpec::default(), &[5], &[]).is_err());
    }

    #[test]
    fn invalid_specs() {
        let cases = [
            GenSpec { n_customers: 0, ..GenSpec::default() },
            GenSpec { target_route_size: 0.5, ..GenSpec::default() },
            GenSpec { grid_size: 1, ..GenSpec::default() },
            GenSpec { demand: DemandKind::Uniform { lo: 0, hi: 0 }, ..GenSpec::default() },
            GenSpec { demand: DemandKind::Uniform { lo: 5, hi: 2 }, ..GenSpec::default() },
            GenSpec { customer_position: CustomerPosition::Clustered, n_clusters: 0, ..GenSpec::default() },
            GenSpec { n_customers: 9, grid_size: 2, ..GenSpec::default() },
        ];
        for spec in cases {
            assert!(matches!(generate_instance(&spec), Err(GenError::InfeasibleSpec(_))), "{spec:?}");
        }
        // A 3x3 grid holds the depot and 8 customers exactly.
        assert!(generate_instance(&GenSpec { n_customers: 8, grid_size: 2, ..GenSpec::default() }).is_ok());
    }

    #[test]
    fn depot_modes() {
        let c = generate_instance(&GenSpec::default()).unwrap();
        assert_eq!(c.nodes().unwrap()[0], crate::instance::Node { id: 1, x: 500.0, y: 500.0 });
        let e = generate_instance(&GenSpec { depot_position: DepotPosition::Eccentric, ..GenSpec::default() })
            .unwrap();
        assert_eq!((e.nodes().unwrap()[0].x, e.nodes().unwrap()[0].y), (0.0, 0.0));
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
n_customers = 30
depot_position = "eccentric"
customer_position = "clustered"
n_clusters = 4
demand_kind = "uniform"
demand_lo = 1
demand_hi = 10
target_route_size = 6.5
grid_size = 200
seed = 7
"#;
        let spec = GenSpec::from_config_str(text).unwrap();
        assert_eq!(spec.demand, DemandKind::Uniform { lo: 1, hi: 10 });
        assert_eq!(spec.customer_position, CustomerPosition::Clustered);
        assert_eq!(GenSpec::from_config_str(&spec.to_config_string()).unwrap(), spec);
        assert!(GenSpec::from_config_str("n_customers = 3\ntarget_route_size = 2\nbogus = 1").is_err());
        assert!(GenSpec::from_config_str("n_customers = 0\ntarget_route_size = 2").is_err());
    }

    #[test]
    fn frozen_output() {
        // Guards generator stability: any change here alters every generated benchmark.
        let spec = GenSpec {
            n_customers: 4,
            demand: DemandKind::Uniform { lo: 1, hi: 9 },
            target_route_size: 2.0,
            grid_size: 100,
            seed: 3,
            ..GenSpec::default()
        };
        let text = generate_instance(&spec).unwrap().to_tsplib();
        let again = parse_instance(&text).unwrap();
        assert_eq!(again.to_tsplib(), text);
        assert_eq!(text, FROZEN);
    }

    const FROZEN: &str = "NAME : gen-R-C-n4-s3
COMMENT : generated depot=central customers=uniform-random clusters=3 demand=uniform(1,9) r=2 grid=100 seed=3
TYPE : CVRP
DIMENSION : 5
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 12
NODE_COORD_SECTION
1 50 50
2 62 8
3 32 8
4 60 81
5 20 22
DEMAND_SECTION
1 0
2 3
3 3
4 8
5 9
DEPOT_SECTION
1
-1
EOF
";
}
