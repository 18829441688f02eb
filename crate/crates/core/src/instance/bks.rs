use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::InstanceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BksEntry {
    pub bks: f64,
    #[serde(default)]
    pub reference: String,
}

/// Best known solution values keyed by exact instance name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BksRegistry {
    entries: BTreeMap<String, BksEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    name: String,
    bks: f64,
    #[serde(default)]
    reference: String,
}

const X_SUBSET: &[(&str, f64)] = &[
    ("X-n101-k25", 27591.0),
    ("X-n106-k14", 26362.0),
    ("X-n110-k13", 14971.0),
    ("X-n979-k58", 118987.0),
    ("X-n1001-k43", 72359.0),
];

impl BksRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A handful of X instances with their published reference values.
    pub fn x_subset() -> Self {
        let mut reg = Self::new();
        for &(name, bks) in X_SUBSET {
            reg.insert(name, bks, "CVRPLIB X set").expect("positive");
        }
        reg
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        bks: f64,
        reference: impl Into<String>,
    ) -> Result<(), InstanceError> {
        let name = name.into();
        if !(bks.is_finite() && bks > 0.0) {
            return Err(InstanceError::Registry(format!("{name}: BKS {bks} must be positive")));
        }
        self.entries.insert(
            name,
            BksEntry {
                bks,
                reference: reference.into(),
            },
        );
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Result<f64, InstanceError> {
        self.entries
            .get(name)
            .map(|e| e.bks)
            .ok_or_else(|| InstanceError::UnknownInstance(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<&BksEntry> {
        self.entries.get(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BksEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Merges `other` into `self`; entries of `other` win.
    pub fn extend(&mut self, other: BksRegistry) {
        self.entries.extend(other.entries);
    }

    /// Reads `name,bks,reference` rows (header required).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, InstanceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        let mut reg = Self::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| InstanceError::Registry(format!("row {}: {e}", i + 2)))?;
            if reg.entries.contains_key(&row.name) {
                return Err(InstanceError::Registry(format!("duplicate entry {}", row.name)));
            }
            reg.insert(row.name, row.bks, row.reference)?;
        }
        Ok(reg)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), InstanceError> {
        let mut w = csv::Writer::from_writer(writer);
        for (name, e) in &self.entries {
            w.serialize(Row {
                name: name.clone(),
                bks: e.bks,
                reference: e.reference.clone(),
            })
            .map_err(|e| InstanceError::Registry(e.to_string()))?;
        }
        w.flush().map_err(|e| InstanceError::Registry(e.to_string()))
    }
}

/// Free-function form of [`BksRegistry::lookup`].
pub fn bks_lookup(reg: &BksRegistry, name: &str) -> Result<f64, InstanceError> {
    reg.lookup(name)
}
