//! Built-in reference heuristic.
//!
//! Clarke-Wright parallel savings, then first-improvement relocate and
//! intra-route 2-opt, restarted from ruin-and-recreate perturbations with
//! record-to-record acceptance until the time limit.
//!
//! Time is measured on a deterministic work clock: every move evaluation
//! costs one unit of [`WORK_UNIT_SECONDS`]. The same instance and seed
//! therefore always give the same trace, independent of machine load. A
//! wall-clock guard stops the search at `time_limit + GRACE_SECONDS` real
//! seconds in case the machine is far slower than the nominal rate.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Trace, GRACE_SECONDS};
use crate::instance::{Instance, Solution};

/// Virtual seconds charged per move evaluation.
pub const WORK_UNIT_SECONDS: f64 = 1e-7;

const EPS: f64 = 1e-9;
/// Record-to-record threshold: accept perturbed solutions within 1% of the best.
const ACCEPT_RATIO: f64 = 0.01;
/// A perturbation removes between 1 and `max(ceil(15% of customers), 3)` customers.
const RUIN_FRACTION: f64 = 0.15;
const MIN_RUIN_UPPER: usize = 3;

struct Search {
    d: Vec<f64>,
    n: usize,
    demand: Vec<u64>,
    capacity: u64,
    work: u64,
    work_limit: u64,
    wall_deadline: Instant,
}

type Routes = Vec<Vec<usize>>;

impl Search {
    #[inline]
    fn dist(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.n + b]
    }

    fn exhausted(&self) -> bool {
        self.work >= self.work_limit || Instant::now() >= self.wall_deadline
    }

    /// Virtual seconds used, capped at the budget.
    fn elapsed(&self) -> f64 {
        self.work.min(self.work_limit) as f64 * WORK_UNIT_SECONDS
    }

    fn route_cost(&self, r: &[usize]) -> f64 {
        let mut prev = 0;
        let mut c = 0.0;
        for &x in r {
            c += self.dist(prev, x);
            prev = x;
        }
        c + self.dist(prev, 0)
    }

    fn cost(&self, routes: &Routes) -> f64 {
        routes.iter().map(|r| self.route_cost(r)).sum()
    }

    fn load(&self, r: &[usize]) -> u64 {
        r.iter().map(|&c| self.demand[c]).sum()
    }

    fn savings(&mut self) -> Routes {
        let m = self.n - 1;
        let mut list = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 1..=m {
            for j in i + 1..=m {
                list.push((self.dist(0, i) + self.dist(0, j) - self.dist(i, j), i, j));
            }
        }
        list.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut routes: Vec<Option<Vec<usize>>> = (0..=m).map(|c| (c > 0).then(|| vec![c])).collect();
        let mut owner: Vec<usize> = (0..=m).collect();
        let mut load: Vec<u64> = self.demand.clone();
        for &(s, i, j) in &list {
            self.work += 1;
            if s <= EPS {
                break;
            }
            let (ri, rj) = (owner[i], owner[j]);
            if ri == rj || load[ri] + load[rj] > self.capacity {
                continue;
            }
            let mut a = routes[ri].take().expect("live route");
            let mut b = routes[rj].take().expect("live route");
            if a.first() == Some(&i) && a.len() > 1 {
                a.reverse();
            }
            if b.last() == Some(&j) && b.len() > 1 {
                b.reverse();
            }
            if a.last() != Some(&i) || b.first() != Some(&j) {
                routes[ri] = Some(a);
                routes[rj] = Some(b);
                continue;
            }
            for &c in &b {
                owner[c] = ri;
            }
            a.extend(b);
            routes[ri] = Some(a);
            load[ri] += load[rj];
        }
        routes.into_iter().flatten().collect()
    }

    /// One first-improvement relocate move; returns whether one was applied.
    fn relocate_once(&mut self, routes: &mut Routes, loads: &mut [u64]) -> bool {
        for r in 0..routes.len() {
            for p in 0..routes[r].len() {
                let c = routes[r][p];
                let prev = if p == 0 { 0 } else { routes[r][p - 1] };
                let next = routes[r].get(p + 1).copied().unwrap_or(0);
                let gain = self.dist(prev, c) + self.dist(c, next) - self.dist(prev, next);
                for r2 in 0..routes.len() {
                    if r2 != r && loads[r2] + self.demand[c] > self.capacity {
                        continue;
                    }
                    let len = routes[r2].len();
                    for k in 0..=len {
                        // Insert between positions k-1 and k of route r2 (as it is now).
                        if r2 == r && (k == p || k == p + 1) {
                            continue;
                        }
                        self.work += 1;
                        let a = if k == 0 { 0 } else { routes[r2][k - 1] };
                        let b = routes[r2].get(k).copied().unwrap_or(0);
                        let add = self.dist(a, c) + self.dist(c, b) - self.dist(a, b);
                        if add - gain < -EPS {
                            routes[r].remove(p);
                            let k = if r2 == r && k > p { k - 1 } else { k };
                            routes[r2].insert(k, c);
                            loads[r] -= self.demand[c];
                            loads[r2] += self.demand[c];
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn two_opt_route(&mut self, route: &mut [usize]) -> bool {
        let len = route.len();
        let at = |r: &[usize], i: isize| if i < 0 || i as usize >= r.len() { 0 } else { r[i as usize] };
        let mut improved = false;
        'restart: loop {
            for i in 0..len {
                for j in i + 1..len {
                    self.work += 1;
                    let a = at(route, i as isize - 1);
                    let b = route[i];
                    let c = route[j];
                    let d = at(route, j as isize + 1);
                    let delta = self.dist(a, c) + self.dist(b, d) - self.dist(a, b) - self.dist(c, d);
                    if delta < -EPS {
                        route[i..=j].reverse();
                        improved = true;
                        continue 'restart;
                    }
                }
            }
            return improved;
        }
    }

    fn local_search(&mut self, routes: &mut Routes) {
        let mut loads: Vec<u64> = routes.iter().map(|r| self.load(r)).collect();
        loop {
            if self.exhausted() {
                break;
            }
            let mut improved = false;
            for r in routes.iter_mut() {
                improved |= self.two_opt_route(r);
            }
            while !self.exhausted() && self.relocate_once(routes, &mut loads) {
                improved = true;
            }
            if !improved {
                break;
            }
        }
        routes.retain(|r| !r.is_empty());
    }

    fn ruin_recreate(&mut self, routes: &mut Routes, rng: &mut ChaCha8Rng) {
        let m = self.n - 1;
        let upper = ((m as f64 * RUIN_FRACTION).ceil() as usize).max(MIN_RUIN_UPPER).min(m);
        let k = rng.random_range(1..=upper);
        let mut all: Vec<usize> = (1..=m).collect();
        all.shuffle(rng);
        let removed = &all[..k];
        for r in routes.iter_mut() {
            r.retain(|c| !removed.contains(c));
        }
        routes.retain(|r| !r.is_empty());
        let mut loads: Vec<u64> = routes.iter().map(|r| self.load(r)).collect();
        for &c in removed {
            let mut best: Option<(f64, usize, usize)> = Some((self.dist(0, c) + self.dist(c, 0), routes.len(), 0));
            for (ri, r) in routes.iter().enumerate() {
                if loads[ri] + self.demand[c] > self.capacity {
                    continue;
                }
                for pos in 0..=r.len() {
                    self.work += 1;
                    let a = if pos == 0 { 0 } else { r[pos - 1] };
                    let b = r.get(pos).copied().unwrap_or(0);
                    let add = self.dist(a, c) + self.dist(c, b) - self.dist(a, b);
                    if best.is_none_or(|(v, _, _)| add < v - EPS) {
                        best = Some((add, ri, pos));
                    }
                }
            }
            match best {
                Some((_, ri, pos)) if ri < routes.len() => {
                    routes[ri].insert(pos, c);
                    loads[ri] += self.demand[c];
                }
                _ => {
                    routes.push(vec![c]);
                    loads.push(self.demand[c]);
                }
            }
        }
    }
}

/// Solves `inst` heuristically for `time_limit` virtual seconds.
///
/// The returned trace has one event per new best solution and its terminal
/// time is the virtual time at which the search stopped.
pub fn reference_solve(inst: &Instance, seed: u64, time_limit: f64) -> (Solution, Trace<f64>) {
    let customers: Vec<usize> = inst.customers().collect();
    let mut ids = Vec::with_capacity(customers.len() + 1);
    ids.push(inst.depot_id());
    ids.extend(&customers);
    let n = ids.len();
    let dm = inst.distance_matrix();
    let mut d = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            d[a * n + b] = dm.get(ids[a] - 1, ids[b] - 1);
        }
    }
    let demand: Vec<u64> = ids.iter().map(|&id| inst.demand(id).unwrap_or(0)).collect();
    let limit = time_limit.max(0.0);
    let mut s = Search {
        d,
        n,
        demand: {
            let mut q = demand;
            q[0] = 0;
            q
        },
        capacity: inst.capacity(),
        work: 0,
        work_limit: (limit / WORK_UNIT_SECONDS).round() as u64,
        wall_deadline: Instant::now() + Duration::from_secs_f64(limit + GRACE_SECONDS),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut current = s.savings();
    s.local_search(&mut current);
    let mut current_cost = s.cost(&current);
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut trace = Trace::empty(0.0);
    let _ = trace.push(s.elapsed(), best_cost);

    if n > 2 {
        while !s.exhausted() {
            let mut cand = current.clone();
            s.ruin_recreate(&mut cand, &mut rng);
            s.local_search(&mut cand);
            let cost = s.cost(&cand);
            if cost < best_cost - EPS {
                best = cand.clone();
                best_cost = cost;
                let _ = trace.push(s.elapsed(), best_cost);
            }
            if cost <= current_cost || cost <= best_cost * (1.0 + ACCEPT_RATIO) {
                current = cand;
                current_cost = cost;
            }
        }
    }
    let _ = trace.set_terminal_time(s.elapsed().max(trace.terminal_time()));

    let routes: Vec<Vec<usize>> = best.iter().map(|r| r.iter().map(|&c| ids[c]).collect()).collect();
    let solution = Solution::with_cost(inst, routes, "reference").expect("routes use known nodes");
    // Both sums add legs route by route in the same order, so they agree exactly.
    debug_assert_eq!(trace.final_cost(), Some(solution.cost));
    (solution, trace)
}
