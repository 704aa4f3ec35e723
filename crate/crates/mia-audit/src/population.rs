//! Labeled populations of examples.
//!
//! A [`Population`] is the raw material of an audit: feature vectors with a
//! class label `y` and a subgroup index `z` drawn from a disjoint partition
//! of the data (e.g. race categories as codified in the source dataset).

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// One labeled example: an individual with features, class label, and
/// subgroup membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    /// Opaque stable identifier (unique within a population).
    pub id: String,
    /// Feature vector; length is constant across a population.
    pub features: Vec<f64>,
    /// Class index in `0..p`.
    pub y: usize,
    /// Subgroup index in `0..k`.
    pub z: usize,
}

/// A collection of labeled examples with declared class and subgroup counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub examples: Vec<LabeledExample>,
    /// Number of classes `p`.
    pub num_classes: usize,
    /// Number of subgroups `k`.
    pub num_subgroups: usize,
    /// Feature dimension `d`.
    pub feature_dim: usize,
}

impl Population {
    /// Builds a population, validating every example against the declared
    /// `p`, `k`, and feature dimension.
    pub fn new(
        examples: Vec<LabeledExample>,
        num_classes: usize,
        num_subgroups: usize,
    ) -> Result<Self> {
        if num_classes == 0 || num_subgroups == 0 {
            return Err(AuditError::validation(
                "population must declare at least one class and one subgroup",
            ));
        }
        let feature_dim = examples.first().map(|e| e.features.len()).unwrap_or(0);
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if ex.y >= num_classes {
                return Err(AuditError::validation(format!(
                    "example {}: class {} out of range (p = {})",
                    ex.id, ex.y, num_classes
                )));
            }
            if ex.z >= num_subgroups {
                return Err(AuditError::validation(format!(
                    "example {}: subgroup {} out of range (k = {})",
                    ex.id, ex.z, num_subgroups
                )));
            }
            if ex.features.len() != feature_dim {
                return Err(AuditError::validation(format!(
                    "example {}: feature length {} differs from {}",
                    ex.id,
                    ex.features.len(),
                    feature_dim
                )));
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(AuditError::validation(format!(
                    "duplicate example id {}",
                    ex.id
                )));
            }
        }
        Ok(Population {
            examples,
            num_classes,
            num_subgroups,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Count of examples per (y, z) cell, indexed `y * k + z`.
    pub fn cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes * self.num_subgroups];
        for ex in &self.examples {
            counts[ex.y * self.num_subgroups + ex.z] += 1;
        }
        counts
    }

    /// Writes the canonical cache format: `id,y,z,f_0..f_{d-1}`.
    pub fn write_canonical_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(w, "id,y,z")?;
        for j in 0..self.feature_dim {
            write!(w, ",f_{j}")?;
        }
        writeln!(w)?;
        for ex in &self.examples {
            write!(w, "{},{},{}", ex.id, ex.y, ex.z)?;
            for v in &ex.features {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the canonical cache format written by [`write_canonical_csv`].
    ///
    /// [`write_canonical_csv`]: Population::write_canonical_csv
    pub fn read_canonical_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "y" || &headers[2] != "z" {
            return Err(AuditError::validation(format!(
                "{}: expected header id,y,z,f_0..",
                path.display()
            )));
        }
        let d = headers.len() - 3;
        let mut examples = Vec::new();
        let mut max_y = 0usize;
        let mut max_z = 0usize;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |field: &str, name: &str| -> Result<usize> {
                field.parse().map_err(|_| AuditError::Parse {
                    path: path.display().to_string(),
                    line: i + 2,
                    message: format!("bad {name} value {field:?}"),
                })
            };
            let y = parse(&rec[1], "y")?;
            let z = parse(&rec[2], "z")?;
            let mut features = Vec::with_capacity(d);
            for j in 0..d {
                let v: f64 = rec[3 + j].parse().map_err(|_| AuditError::Parse {
                    path: path.display().to_string(),
                    line: i + 2,
                    message: format!("bad feature value {:?}", &rec[3 + j]),
                })?;
                features.push(v);
            }
            max_y = max_y.max(y);
            max_z = max_z.max(z);
            examples.push(LabeledExample {
                id: rec[0].to_string(),
                features,
                y,
                z,
            });
        }
        Population::new(examples, max_y + 1, max_z + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, y: usize, z: usize) -> LabeledExample {
        LabeledExample {
            id: id.into(),
            features: vec![0.5, -1.0],
            y,
            z,
        }
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let err = Population::new(vec![ex("a", 2, 0)], 2, 1).unwrap_err();
        assert!(err.to_string().contains("class 2"));
        let err = Population::new(vec![ex("a", 0, 3)], 2, 2).unwrap_err();
        assert!(err.to_string().contains("subgroup 3"));
    }

    #[test]
    fn rejects_ragged_features_and_duplicate_ids() {
        let mut bad = ex("b", 0, 0);
        bad.features = vec![1.0];
        assert!(Population::new(vec![ex("a", 0, 0), bad], 2, 1).is_err());
        assert!(Population::new(vec![ex("a", 0, 0), ex("a", 1, 0)], 2, 1).is_err());
    }

    #[test]
    fn canonical_csv_round_trip() {
        let pop = Population::new(vec![ex("a", 0, 0), ex("b", 1, 1)], 2, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        pop.write_canonical_csv(&path).unwrap();
        let back = Population::read_canonical_csv(&path).unwrap();
        assert_eq!(pop, back);
    }
}
