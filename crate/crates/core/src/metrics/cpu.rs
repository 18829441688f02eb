use std::collections::BTreeMap;
use std::io::Read;

use super::MetricsError;
use crate::Scalar;

/// Single-thread CPU ratings with one designated base CPU.
///
/// Times measured on CPU `m` are converted to the base CPU by dividing by
/// `rating(base) / rating(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpuRatingTable {
    ratings: BTreeMap<String, f64>,
    base_cpu: String,
}

fn truthy(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "true" | "yes" | "1" | "base=true" | "base")
}

impl CpuRatingTable {
    pub fn new(
        ratings: impl IntoIterator<Item = (String, f64)>,
        base_cpu: impl Into<String>,
    ) -> Result<Self, MetricsError> {
        let mut map = BTreeMap::new();
        for (name, r) in ratings {
            if !(r.is_finite() && r > 0.0) {
                return Err(MetricsError::Ratings(format!("{name}: rating {r} must be positive")));
            }
            if map.insert(name.clone(), r).is_some() {
                return Err(MetricsError::Ratings(format!("duplicate CPU {name:?}")));
            }
        }
        let base_cpu = base_cpu.into();
        if !map.contains_key(&base_cpu) {
            return Err(MetricsError::UnknownCpu(base_cpu));
        }
        Ok(CpuRatingTable { ratings: map, base_cpu })
    }

    /// Reads `cpu_name,rating[,base]` rows with a header.
    ///
    /// The base CPU is the row whose `base` column is truthy, unless
    /// `base_override` names one explicitly.
    pub fn from_csv<R: Read>(reader: R, base_override: Option<&str>) -> Result<Self, MetricsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| MetricsError::Ratings(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let name_col = col("cpu_name").ok_or_else(|| MetricsError::Ratings("missing cpu_name column".into()))?;
        let rating_col = col("rating").ok_or_else(|| MetricsError::Ratings("missing rating column".into()))?;
        let base_col = col("base");
        let mut rows = Vec::new();
        let mut flagged = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| MetricsError::Ratings(format!("row {}: {e}", i + 2)))?;
            let name = rec.get(name_col).unwrap_or("").to_string();
            let rating: f64 = rec
                .get(rating_col)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| MetricsError::Ratings(format!("row {}: bad rating", i + 2)))?;
            if base_col.and_then(|c| rec.get(c)).is_some_and(truthy) {
                flagged.push(name.clone());
            }
            rows.push((name, rating));
        }
        let base = match base_override {
            Some(b) => b.to_string(),
            None => match flagged.as_slice() {
                [one] => one.clone(),
                [] => return Err(MetricsError::Ratings("no base CPU flagged".into())),
                _ => return Err(MetricsError::Ratings("more than one base CPU flagged".into())),
            },
        };
        CpuRatingTable::new(rows, base)
    }

    pub fn base_cpu(&self) -> &str {
        &self.base_cpu
    }

    pub fn rating(&self, cpu: &str) -> Result<f64, MetricsError> {
        self.ratings.get(cpu).copied().ok_or_else(|| MetricsError::UnknownCpu(cpu.to_string()))
    }

    pub fn contains(&self, cpu: &str) -> bool {
        self.ratings.contains_key(cpu)
    }

    /// `rating(base) / rating(measured)`.
    pub fn scaling_factor(&self, measured_cpu: &str) -> Result<f64, MetricsError> {
        Ok(self.rating(&self.base_cpu)? / self.rating(measured_cpu)?)
    }

    pub fn normalize_time<S: Scalar>(&self, t: S, measured_cpu: &str) -> Result<S, MetricsError> {
        if !(t.is_finite() && t >= S::zero()) {
            return Err(MetricsError::InvalidValue(t.as_f64()));
        }
        let f = self.scaling_factor(measured_cpu)?;
        Ok(t / S::lit(f))
    }
}

pub fn scaling_factor(table: &CpuRatingTable, measured_cpu: &str) -> Result<f64, MetricsError> {
    table.scaling_factor(measured_cpu)
}

pub fn normalize_time<S: Scalar>(t: S, table: &CpuRatingTable, measured_cpu: &str) -> Result<S, MetricsError> {
    table.normalize_time(t, measured_cpu)
}
