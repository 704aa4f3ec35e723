//! Evaluation-set construction.
//!
//! An [`EvaluationSet`] is the balanced, (y, z)-stratified union of member
//! and non-member samples on which the adversaries are estimated and scored.
//! By construction it contains exactly as many members as non-members
//! overall *and* within every (y, z) cell, so the uniform-membership and
//! membership-independence assumptions hold exactly on the empirical data.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::population::LabeledExample;

/// One audited example: labels, membership bit, and the discretized bin of
/// the model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    /// Class index.
    pub y: usize,
    /// Subgroup index.
    pub z: usize,
    /// Membership bit: 1 = member of the training set, 0 = non-member.
    pub m: u8,
    /// Discretized model-output bin in `0..bins`.
    pub bin: usize,
}

/// Balanced, stratified set of audit records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSet {
    records: Vec<AuditRecord>,
    bins: usize,
    num_classes: usize,
    num_subgroups: usize,
    /// Resampling seed that produced this set.
    seed: u64,
}

/// A (y, z) cell that could not contribute records because one side of the
/// pool was empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedCell {
    pub y: usize,
    pub z: usize,
    pub member_count: usize,
    pub nonmember_count: usize,
}

/// Result of [`build_evaluation_set`]: the set plus a report of cells that
/// were dropped because one side had no examples.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub set: EvaluationSet,
    pub dropped: Vec<DroppedCell>,
}

/// Maps a confidence vector to a bin index by discretizing the confidence
/// assigned to the true class into `bins` uniformly spaced bins on [0, 1].
/// The upper boundary `s = 1` clamps into the last bin.
pub fn discretize_confidence(conf: &[f64], true_label: usize, bins: usize) -> Result<usize> {
    if bins < 2 {
        return Err(AuditError::validation(format!(
            "bin count must be at least 2, got {bins}"
        )));
    }
    if true_label >= conf.len() {
        return Err(AuditError::validation(format!(
            "true label {true_label} out of range for a {}-class confidence vector",
            conf.len()
        )));
    }
    let sum: f64 = conf.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(AuditError::validation(format!(
            "confidence vector is not normalized: entries sum to {sum}"
        )));
    }
    if conf.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
        return Err(AuditError::validation(
            "confidence vector has entries outside [0, 1]".to_string(),
        ));
    }
    let s = conf[true_label];
    let raw = (s * bins as f64).floor();
    let idx = if raw < 0.0 { 0 } else { raw as usize };
    Ok(idx.min(bins - 1))
}

/// Builds a balanced evaluation set from member and non-member pools.
///
/// For each (y, z) cell, `min(members, nonmembers)` examples are sampled
/// from each side without replacement; cells empty on one side contribute
/// nothing and are reported in the outcome. Each example's confidence
/// vector is discretized with [`discretize_confidence`].
pub fn build_evaluation_set(
    member_pool: &[(LabeledExample, Vec<f64>)],
    nonmember_pool: &[(LabeledExample, Vec<f64>)],
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
    seed: u64,
) -> Result<BuildOutcome> {
    if member_pool.is_empty() || nonmember_pool.is_empty() {
        return Err(AuditError::validation(
            "both member and non-member pools must be non-empty",
        ));
    }
    let mut ids = HashSet::with_capacity(member_pool.len() + nonmember_pool.len());
    for (ex, _) in member_pool.iter().chain(nonmember_pool.iter()) {
        if !ids.insert(ex.id.as_str()) {
            return Err(AuditError::validation(format!(
                "id {} appears twice across the pools",
                ex.id
            )));
        }
    }

    let cell_of = |ex: &LabeledExample| -> Result<usize> {
        if ex.y >= num_classes || ex.z >= num_subgroups {
            return Err(AuditError::validation(format!(
                "example {}: (y={}, z={}) outside declared (p={}, k={})",
                ex.id, ex.y, ex.z, num_classes, num_subgroups
            )));
        }
        Ok(ex.y * num_subgroups + ex.z)
    };
    let n_cells = num_classes * num_subgroups;
    let mut member_cells: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
    let mut nonmember_cells: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
    for (i, (ex, _)) in member_pool.iter().enumerate() {
        member_cells[cell_of(ex)?].push(i);
    }
    for (i, (ex, _)) in nonmember_pool.iter().enumerate() {
        nonmember_cells[cell_of(ex)?].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for y in 0..num_classes {
        for z in 0..num_subgroups {
            let cell = y * num_subgroups + z;
            let m_idx = &member_cells[cell];
            let n_idx = &nonmember_cells[cell];
            if m_idx.is_empty() && n_idx.is_empty() {
                continue;
            }
            let take = m_idx.len().min(n_idx.len());
            if take == 0 {
                dropped.push(DroppedCell {
                    y,
                    z,
                    member_count: m_idx.len(),
                    nonmember_count: n_idx.len(),
                });
                continue;
            }
            let chosen_m: Vec<usize> = m_idx.choose_multiple(&mut rng, take).copied().collect();
            let chosen_n: Vec<usize> = n_idx.choose_multiple(&mut rng, take).copied().collect();
            for &i in &chosen_m {
                let (ex, conf) = &member_pool[i];
                records.push(AuditRecord {
                    id: ex.id.clone(),
                    y: ex.y,
                    z: ex.z,
                    m: 1,
                    bin: discretize_confidence(conf, ex.y, bins)?,
                });
            }
            for &i in &chosen_n {
                let (ex, conf) = &nonmember_pool[i];
                records.push(AuditRecord {
                    id: ex.id.clone(),
                    y: ex.y,
                    z: ex.z,
                    m: 0,
                    bin: discretize_confidence(conf, ex.y, bins)?,
                });
            }
        }
    }
    if records.is_empty() {
        return Err(AuditError::unusable(
            "no (y, z) cell has examples on both sides; evaluation set would be empty",
        ));
    }
    let set = EvaluationSet::from_records(records, num_classes, num_subgroups, bins, seed)?;
    Ok(BuildOutcome { set, dropped })
}

impl EvaluationSet {
    /// Assembles a set from records, enforcing the balance, stratification,
    /// and unique-id invariants.
    pub fn from_records(
        records: Vec<AuditRecord>,
        num_classes: usize,
        num_subgroups: usize,
        bins: usize,
        seed: u64,
    ) -> Result<Self> {
        if bins < 2 {
            return Err(AuditError::validation(format!(
                "bin count must be at least 2, got {bins}"
            )));
        }
        let mut in_counts = vec![0i64; num_classes * num_subgroups];
        let mut out_counts = vec![0i64; num_classes * num_subgroups];
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if r.y >= num_classes || r.z >= num_subgroups {
                return Err(AuditError::validation(format!(
                    "record {}: (y={}, z={}) outside declared (p={}, k={})",
                    r.id, r.y, r.z, num_classes, num_subgroups
                )));
            }
            if r.bin >= bins {
                return Err(AuditError::validation(format!(
                    "record {}: bin {} out of range (B = {bins})",
                    r.id, r.bin
                )));
            }
            if r.m > 1 {
                return Err(AuditError::validation(format!(
                    "record {}: membership bit must be 0 or 1",
                    r.id
                )));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(AuditError::validation(format!(
                    "duplicate record id {}",
                    r.id
                )));
            }
            let cell = r.y * num_subgroups + r.z;
            if r.m == 1 {
                in_counts[cell] += 1;
            } else {
                out_counts[cell] += 1;
            }
        }
        for (cell, (&a, &b)) in in_counts.iter().zip(out_counts.iter()).enumerate() {
            if a != b {
                return Err(AuditError::validation(format!(
                    "cell (y={}, z={}) is unbalanced: {} members vs {} non-members",
                    cell / num_subgroups,
                    cell % num_subgroups,
                    a,
                    b
                )));
            }
        }
        Ok(EvaluationSet {
            records,
            bins,
            num_classes,
            num_subgroups,
            seed,
        })
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_subgroups(&self) -> usize {
        self.num_subgroups
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes the reproducibility export: `id,y,z,m,bin`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "id,y,z,m,bin")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{},{}", r.id, r.y, r.z, r.m, r.bin)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A row of the external audit-input format `id,y,z,m,conf_0..conf_{p-1}`.
#[derive(Debug, Clone)]
pub struct ConfidenceRow {
    pub example: LabeledExample,
    /// Membership bit; `None` when the file carries no `m` column.
    pub m: Option<u8>,
    pub confidence: Vec<f64>,
}

/// Reads an audit-input CSV (`id,y,z[,m],conf_0..conf_{p-1}`), used to audit
/// an externally trained model from its recorded confidence outputs.
pub fn read_confidence_csv(path: &Path) -> Result<Vec<ConfidenceRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 4 || names[0] != "id" || names[1] != "y" || names[2] != "z" {
        return Err(AuditError::validation(format!(
            "{}: expected header id,y,z[,m],conf_0..",
            path.display()
        )));
    }
    let has_m = names[3] == "m";
    let conf_start = if has_m { 4 } else { 3 };
    let p = names.len() - conf_start;
    if p == 0 || names[conf_start] != "conf_0" {
        return Err(AuditError::validation(format!(
            "{}: expected conf_0..conf_{{p-1}} columns after {}",
            path.display(),
            names[conf_start - 1]
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let fail = |message: String| AuditError::Parse {
            path: path.display().to_string(),
            line,
            message,
        };
        let y: usize = rec[1]
            .parse()
            .map_err(|_| fail(format!("bad y {:?}", &rec[1])))?;
        let z: usize = rec[2]
            .parse()
            .map_err(|_| fail(format!("bad z {:?}", &rec[2])))?;
        let m = if has_m {
            let v: u8 = rec[3]
                .parse()
                .map_err(|_| fail(format!("bad m {:?}", &rec[3])))?;
            if v > 1 {
                return Err(fail(format!("membership bit must be 0 or 1, got {v}")));
            }
            Some(v)
        } else {
            None
        };
        let mut confidence = Vec::with_capacity(p);
        for j in 0..p {
            let v: f64 = rec[conf_start + j]
                .parse()
                .map_err(|_| fail(format!("bad confidence {:?}", &rec[conf_start + j])))?;
            confidence.push(v);
        }
        rows.push(ConfidenceRow {
            example: LabeledExample {
                id: rec[0].to_string(),
                features: Vec::new(),
                y,
                z,
            },
            m,
            confidence,
        });
    }
    Ok(rows)
}
