use serde::{Deserialize, Serialize};

use crate::Scalar;

/// An algorithm placed by average normalized time (minutes) and average gap (%).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoPoint<S> {
    pub name: String,
    pub avg_time: S,
    pub avg_gap: S,
}

impl<S: Scalar> AlgoPoint<S> {
    pub fn new(name: impl Into<String>, avg_time: S, avg_gap: S) -> Self {
        AlgoPoint {
            name: name.into(),
            avg_time,
            avg_gap,
        }
    }

    /// At least as good in both coordinates and strictly better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.avg_time <= other.avg_time
            && self.avg_gap <= other.avg_gap
            && (self.avg_time < other.avg_time || self.avg_gap < other.avg_gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoSplit<S> {
    /// Sorted by time, then gap, then name.
    pub nondominated: Vec<AlgoPoint<S>>,
    /// In input order.
    pub dominated: Vec<AlgoPoint<S>>,
}

pub fn pareto_front<S: Scalar>(points: &[AlgoPoint<S>]) -> ParetoSplit<S> {
    let mut nondominated = Vec::new();
    let mut dominated = Vec::new();
    for p in points {
        if points.iter().any(|q| q.dominates(p)) {
            dominated.push(p.clone());
        } else {
            nondominated.push(p.clone());
        }
    }
    nondominated.sort_by(|a: &AlgoPoint<S>, b| {
        a.avg_time
            .partial_cmp(&b.avg_time)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.avg_gap.partial_cmp(&b.avg_gap).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.name.cmp(&b.name))
    });
    ParetoSplit { nondominated, dominated }
}
