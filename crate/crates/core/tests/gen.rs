use std::collections::HashSet;

use benchlab_core::gen::{generate_instance, CustomerPosition, DemandKind, DepotPosition, GenSpec};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = GenSpec> {
    (
        1usize..60,
        prop_oneof![
            Just(DepotPosition::Central),
            Just(DepotPosition::Eccentric),
            Just(DepotPosition::Random)
        ],
        prop_oneof![
            Just(CustomerPosition::UniformRandom),
            Just(CustomerPosition::Clustered),
            Just(CustomerPosition::Mixed)
        ],
        1usize..6,
        prop_oneof![
            Just(DemandKind::Unit),
            (1u64..20, 0u64..30).prop_map(|(lo, w)| DemandKind::Uniform { lo, hi: lo + w }),
            Just(DemandKind::SmallLargeMix)
        ],
        1.0f64..20.0,
        10u32..500,
        any::<u64>(),
    )
        .prop_map(|(n, depot, cust, k, demand, r, grid, seed)| GenSpec {
            n_customers: n,
            depot_position: depot,
            customer_position: cust,
            n_clusters: k,
            demand,
            target_route_size: r,
            grid_size: grid,
            seed,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_are_well_formed(spec in spec_strategy()) {
        let inst = generate_instance(&spec).unwrap();
        prop_assert_eq!(inst.num_customers(), spec.n_customers);
        let nodes = inst.nodes().unwrap();
        let g = f64::from(spec.grid_size);
        let mut seen = HashSet::new();
        for n in &nodes {
            prop_assert!(n.x.fract() == 0.0 && n.y.fract() == 0.0);
            prop_assert!((0.0..=g).contains(&n.x) && (0.0..=g).contains(&n.y));
            prop_assert!(seen.insert((n.x as i64, n.y as i64)), "duplicate point");
        }
        let demands: Vec<u64> = inst.customers().map(|c| inst.demand(c).unwrap()).collect();
        let max = *demands.iter().max().unwrap();
        prop_assert!(inst.capacity() >= max);
        let mean = demands.iter().sum::<u64>() as f64 / demands.len() as f64;
        let expected = ((spec.target_route_size * mean - 1e-9).ceil() as u64).max(max);
        prop_assert_eq!(inst.capacity(), expected);
        match spec.demand {
            DemandKind::Unit => prop_assert!(demands.iter().all(|&d| d == 1)),
            DemandKind::Uniform { lo, hi } => prop_assert!(demands.iter().all(|&d| (lo..=hi).contains(&d))),
            DemandKind::SmallLargeMix => prop_assert!(demands.iter().all(|&d| (1..=10).contains(&d) || (50..=100).contains(&d))),
        }
        prop_assert_eq!(generate_instance(&spec).unwrap().to_tsplib(), inst.to_tsplib());
    }
}

#[test]
fn clustered_points_stay_near_some_cluster() {
    let spec = GenSpec {
        n_customers: 200,
        customer_position: CustomerPosition::Clustered,
        n_clusters: 2,
        grid_size: 1000,
        seed: 5,
        ..GenSpec::default()
    };
    let inst = generate_instance(&spec).unwrap();
    let radius = f64::from(spec.cluster_radius());
    let pts: Vec<(f64, f64)> = inst.nodes().unwrap()[1..].iter().map(|n| (n.x, n.y)).collect();
    // Every pair of points within the same cluster is at most 2 radii apart,
    // so with two clusters the points split into at most two such groups.
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in &pts {
        if !groups.iter().any(|&(gx, gy)| ((x - gx).powi(2) + (y - gy).powi(2)).sqrt() <= 2.0 * radius) {
            groups.push((x, y));
        }
    }
    assert!(groups.len() <= 2, "{} groups", groups.len());
}
