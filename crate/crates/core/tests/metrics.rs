use benchlab_core::metrics::{
    aggregate_runs, boxplot_stats, convergence_profile, gap, log_grid, primal_integral, CpuRatingTable,
    PrimalGapFunction,
};
use benchlab_core::orchestrator::{ClockKind, ExitStatus, Trace, TraceMode};
use benchlab_core::RunRecord;
use proptest::prelude::*;

/// Left Riemann sum of the gap step function with step `dt`.
fn riemann(events: &[(f64, f64)], bks: f64, horizon: f64, dt: f64) -> f64 {
    let steps = (horizon / dt).round() as usize;
    let mut total = 0.0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let best = events.iter().filter(|e| e.0 <= t).map(|e| e.1).fold(f64::INFINITY, f64::min);
        let g = if best.is_finite() {
            (best - bks).abs() / best.abs().max(bks.abs())
        } else {
            1.0
        };
        total += g * dt;
    }
    total
}

/// Traces whose event times sit on the `dt` lattice, so the Riemann sum is exact up to float error.
fn lattice_trace() -> impl Strategy<Value = (Vec<(f64, f64)>, f64)> {
    (prop::collection::vec((1u32..10_000, 1u32..500), 1..8), 100.0f64..200.0).prop_map(|(raw, bks)| {
        let mut times: Vec<u32> = raw.iter().map(|r| r.0).collect();
        times.sort_unstable();
        times.dedup();
        let mut cost = bks + 600.0;
        let events = times
            .iter()
            .zip(&raw)
            .map(|(&t, &(_, dec))| {
                cost = (cost - dec as f64).max(bks);
                (t as f64 * 1e-4, cost)
            })
            .collect::<Vec<_>>();
        (events, bks)
    })
}

fn trace_of(events: &[(f64, f64)]) -> Trace<f64> {
    let mut t = Trace::empty(0.0);
    for &(time, cost) in events {
        let _ = t.push(time, cost);
    }
    t
}

fn record(seed: u64, cost: Option<f64>, time: f64, cpu: &str) -> RunRecord {
    RunRecord {
        solver: "s".into(),
        instance: "i".into(),
        seed,
        trace: Trace::empty(time),
        final_cost: cost,
        final_solution: None,
        wall_time: time,
        cpu_name: cpu.into(),
        threads_used: 1,
        exit_status: ExitStatus::Ok,
        clock: ClockKind::Wall,
        trace_mode: TraceMode::FinalOnly,
        time_limit: 10.0,
        gpu_note: None,
        error: None,
    }
}

#[test]
fn closed_forms() {
    let instant = Trace::from_pairs(&[(0.0, 100.0)]).unwrap();
    assert_eq!(primal_integral(&instant, 100.0, 10.0).unwrap(), 0.0);
    let half = PrimalGapFunction::from_incumbents(&[(2.0, 200.0)], 100.0).unwrap();
    assert_eq!(half.integral(10.0).unwrap(), 6.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn integral_matches_riemann_sum((events, bks) in lattice_trace(), horizon_steps in 1u32..12_000) {
        let horizon = horizon_steps as f64 * 1e-4;
        let trace = trace_of(&events);
        let exact = primal_integral(&trace, bks, horizon).unwrap();
        let oracle = riemann(&events, bks, horizon, 1e-4);
        prop_assert!((exact - oracle).abs() < 1e-6, "{} vs {}", exact, oracle);
    }

    #[test]
    fn integral_monotone_in_horizon((events, bks) in lattice_trace(), h in 0.01f64..2.0, extra in 0.0f64..1.0) {
        let trace = trace_of(&events);
        let a = primal_integral(&trace, bks, h).unwrap();
        let b = primal_integral(&trace, bks, h + extra).unwrap();
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn non_improving_inserts_do_nothing((events, bks) in lattice_trace(), t in 0.0f64..1.0, h in 0.1f64..2.0) {
        let f = PrimalGapFunction::from_incumbents(&events, bks).unwrap();
        let worst = events.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
        let mut more = events.clone();
        more.push((t.max(events[0].0), worst + 1.0));
        let g = PrimalGapFunction::from_incumbents(&more, bks).unwrap();
        prop_assert_eq!(f.integral(h).unwrap(), g.integral(h).unwrap());
    }

    #[test]
    fn aggregate_is_order_free(costs in prop::collection::vec(100.0f64..200.0, 1..10), rot in 0usize..10) {
        let recs: Vec<RunRecord> = costs.iter().enumerate().map(|(i, &c)| record(i as u64, Some(c), 1.0, "m")).collect();
        let mut rotated = recs.clone();
        rotated.rotate_left(rot % recs.len());
        let a = aggregate_runs(&recs, 100.0, None).unwrap();
        let b = aggregate_runs(&rotated, 100.0, None).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.best_cost <= a.avg_cost && a.avg_cost <= a.worst_cost);
        prop_assert!((a.avg_gap - a.mean_run_gap).abs() < 1e-9);
    }

    #[test]
    fn normalization_round_trip(t in 0.001f64..1e4, r1 in 1.0f64..5000.0, r2 in 1.0f64..5000.0) {
        let table = CpuRatingTable::new([("base".to_string(), r1), ("m".to_string(), r2)], "base").unwrap();
        let back = table.normalize_time(t, "m").unwrap() * table.scaling_factor("m").unwrap();
        prop_assert!((back - t).abs() <= 1e-12 * t.max(1.0));
    }

    #[test]
    fn profile_nonincreasing_and_ends_at_mean(traces in prop::collection::vec(lattice_trace(), 1..5)) {
        let bks = 100.0;
        let owned: Vec<Trace<f64>> = traces.iter().map(|(ev, _)| {
            let shifted: Vec<(f64, f64)> = ev.iter().map(|&(t, c)| (t, c - ev[0].1 + 190.0)).collect();
            trace_of(&shifted)
        }).collect();
        let refs: Vec<(&Trace<f64>, f64)> = owned.iter().map(|t| (t, bks)).collect();
        let grid = log_grid(1e-4, 2.0, 50).unwrap();
        let prof = convergence_profile(&refs, &grid).unwrap();
        prop_assert!(prof.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        let finals: Vec<f64> = owned.iter().map(|t| gap(t.final_cost().unwrap(), bks).unwrap()).collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        prop_assert!((prof.last().unwrap().1 - mean).abs() < 1e-9);
    }

    #[test]
    fn boxplot_ordering(values in prop::collection::vec(-100.0f64..100.0, 1..40)) {
        let b = boxplot_stats(&values).unwrap();
        prop_assert!(b.lower_whisker <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.upper_whisker);
        prop_assert_eq!(b.n, values.len());
        let inside = values.iter().filter(|v| **v >= b.lower_whisker && **v <= b.upper_whisker).count();
        prop_assert_eq!(inside + b.outliers.len(), values.len());
    }
}

#[test]
fn aggregate_skips_failed_runs_and_normalizes() {
    let table = CpuRatingTable::new([("fast".to_string(), 2277.0), ("slow".to_string(), 594.0)], "fast").unwrap();
    let recs = vec![record(1, Some(110.0), 383.3, "slow"), record(2, None, 1000.0, "slow"), record(3, Some(120.0), 383.3, "slow")];
    let s = aggregate_runs(&recs, 100.0, Some(&table)).unwrap();
    assert_eq!(s.n_runs, 2);
    assert_eq!(s.avg_cost, 115.0);
    assert!((s.avg_gap - 15.0).abs() < 1e-12);
    assert!((s.avg_normalized_time - 383.3 * 594.0 / 2277.0).abs() < 1e-9);
    assert!(table.normalize_time(1.0, "unknown").is_err());
}

#[test]
fn ratings_csv() {
    let t = CpuRatingTable::from_csv("cpu_name,rating,base\nXeon,2277,yes\nOld,594,\n".as_bytes(), None).unwrap();
    assert_eq!(t.base_cpu(), "Xeon");
    let f = t.scaling_factor("Old").unwrap();
    assert!((3.82..=3.84).contains(&f));
    let o = CpuRatingTable::from_csv("cpu_name,rating,base\nXeon,2277,yes\nOld,594,\n".as_bytes(), Some("Old")).unwrap();
    assert_eq!(o.base_cpu(), "Old");
}
