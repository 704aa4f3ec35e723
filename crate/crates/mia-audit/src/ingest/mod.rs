//! Dataset ingestion: raw tabular sources into labeled populations.

mod adult;
mod compas;

pub use adult::load_adult;
pub use compas::load_compas;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::population::Population;

/// Provenance and schema of an ingested dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub examples: usize,
    pub feature_count: usize,
    pub label_column: String,
    pub subgroup_column: String,
    /// Subgroup index -> short name; a bijection.
    pub subgroup_names: Vec<String>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    /// Rows dropped during ingestion (filters plus unparseable rows).
    pub dropped_rows: usize,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let unique: HashSet<&String> = self.subgroup_names.iter().collect();
        if unique.len() != self.subgroup_names.len() {
            return Err(AuditError::validation(
                "subgroup name mapping is not a bijection",
            ));
        }
        if self.feature_names.len() != self.feature_count {
            return Err(AuditError::validation(format!(
                "manifest lists {} feature names for {} features",
                self.feature_names.len(),
                self.feature_count
            )));
        }
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let manifest: DatasetManifest = serde_json::from_reader(file)?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Sidecar path for a canonical CSV's manifest.
pub fn manifest_path(csv_path: &Path) -> std::path::PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".manifest.json");
    std::path::PathBuf::from(s)
}

/// Writes the canonical cache (`id,y,z,f_0..`) plus its manifest sidecar.
pub fn write_canonical(
    pop: &Population,
    manifest: &DatasetManifest,
    csv_path: &Path,
) -> Result<()> {
    pop.write_canonical_csv(csv_path)?;
    manifest.save_json(&manifest_path(csv_path))?;
    Ok(())
}

/// Reads a canonical cache; the manifest sidecar, when present, fixes the
/// declared class/subgroup counts.
pub fn read_canonical(csv_path: &Path) -> Result<(Population, Option<DatasetManifest>)> {
    let pop = Population::read_canonical_csv(csv_path)?;
    let mpath = manifest_path(csv_path);
    if mpath.exists() {
        let manifest = DatasetManifest::load_json(&mpath)?;
        let pop = Population::new(
            pop.examples,
            manifest.class_names.len().max(pop.num_classes),
            manifest.subgroup_names.len().max(pop.num_subgroups),
        )?;
        Ok((pop, Some(manifest)))
    } else {
        Ok((pop, None))
    }
}

/// One-hot encoder over a fixed category list; unknown values are an error
/// naming the row.
pub(crate) struct CategoryEncoder {
    column: &'static str,
    values: Vec<&'static str>,
}

impl CategoryEncoder {
    pub fn new(column: &'static str, values: &[&'static str]) -> Self {
        CategoryEncoder {
            column,
            values: values.to_vec(),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = String> + '_ {
        self.values.iter().map(|v| format!("{}={}", self.column, v))
    }

    pub fn encode(&self, value: &str, out: &mut Vec<f64>, row: usize) -> Result<()> {
        let pos = self
            .values
            .iter()
            .position(|v| *v == value)
            .ok_or_else(|| AuditError::Parse {
                path: self.column.to_string(),
                line: row,
                message: format!("unknown {} value {value:?}", self.column),
            })?;
        let start = out.len();
        out.resize(start + self.values.len(), 0.0);
        out[start + pos] = 1.0;
        Ok(())
    }
}
