use std::io::Read;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// One row of an `instance,gap_a,gap_b` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedGap {
    pub instance: String,
    pub gap_a: f64,
    pub gap_b: f64,
}

/// Reads a paired-gap table with a header row.
pub fn read_paired_gaps<R: Read>(reader: R) -> Result<Vec<PairedGap>, StatsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, row) in rdr.deserialize::<PairedGap>().enumerate() {
        let row = row.map_err(|e| StatsError::Input(format!("row {}: {e}", i + 2)))?;
        if !(row.gap_a.is_finite() && row.gap_b.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        if !seen.insert(row.instance.clone()) {
            return Err(StatsError::Input(format!("duplicate instance {}", row.instance)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(rows)
}
