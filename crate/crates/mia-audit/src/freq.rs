//! Empirical frequency tables over (membership, class, subgroup, bin).
//!
//! The table holds exact integer tallies; conditional probabilities are
//! derived on demand and are defined only on cells with a positive count.
//! Unseen cells are left undefined rather than zero-imputed so that
//! downstream consumers apply their own tie policy.

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::evalset::EvaluationSet;

/// Joint counts `n[m][y][b]` and `n[m][y][z][b]` with derived conditionals
/// and marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
    /// `[m][y][b]`
    counts: Vec<u64>,
    /// `[m][y][z][b]`
    counts_sub: Vec<u64>,
    /// `[m][y]` row totals.
    totals_my: Vec<u64>,
    /// `[m][y][z]` row totals.
    totals_myz: Vec<u64>,
    count_y: Vec<u64>,
    count_z: Vec<u64>,
    /// `[y][z]`
    count_yz: Vec<u64>,
    n_records: u64,
}

/// Tallies an evaluation set into a frequency table.
pub fn estimate_tables(set: &EvaluationSet) -> FrequencyTable {
    let p = set.num_classes();
    let k = set.num_subgroups();
    let bins = set.bins();
    let mut t = FrequencyTable {
        num_classes: p,
        num_subgroups: k,
        bins,
        counts: vec![0; 2 * p * bins],
        counts_sub: vec![0; 2 * p * k * bins],
        totals_my: vec![0; 2 * p],
        totals_myz: vec![0; 2 * p * k],
        count_y: vec![0; p],
        count_z: vec![0; k],
        count_yz: vec![0; p * k],
        n_records: 0,
    };
    for r in set.records() {
        let m = r.m as usize;
        t.counts[(m * p + r.y) * bins + r.bin] += 1;
        t.counts_sub[((m * p + r.y) * k + r.z) * bins + r.bin] += 1;
        t.totals_my[m * p + r.y] += 1;
        t.totals_myz[(m * p + r.y) * k + r.z] += 1;
        t.count_y[r.y] += 1;
        t.count_z[r.z] += 1;
        t.count_yz[r.y * k + r.z] += 1;
        t.n_records += 1;
    }
    t
}

impl FrequencyTable {
    /// Builds a table directly from fine-grained counts `n[m][y][z][b]`
    /// (indexed `((m * p + y) * k + z) * bins + b`); the coarse table is
    /// derived by summation.
    pub fn from_counts(
        num_classes: usize,
        num_subgroups: usize,
        bins: usize,
        counts_sub: Vec<u64>,
    ) -> Result<Self> {
        let expected = 2 * num_classes * num_subgroups * bins;
        if counts_sub.len() != expected {
            return Err(AuditError::validation(format!(
                "expected {expected} fine-grained counts, got {}",
                counts_sub.len()
            )));
        }
        let (p, k) = (num_classes, num_subgroups);
        let mut t = FrequencyTable {
            num_classes: p,
            num_subgroups: k,
            bins,
            counts: vec![0; 2 * p * bins],
            counts_sub,
            totals_my: vec![0; 2 * p],
            totals_myz: vec![0; 2 * p * k],
            count_y: vec![0; p],
            count_z: vec![0; k],
            count_yz: vec![0; p * k],
            n_records: 0,
        };
        for m in 0..2 {
            for y in 0..p {
                for z in 0..k {
                    for b in 0..bins {
                        let c = t.counts_sub[((m * p + y) * k + z) * bins + b];
                        t.counts[(m * p + y) * bins + b] += c;
                        t.totals_my[m * p + y] += c;
                        t.totals_myz[(m * p + y) * k + z] += c;
                        t.count_y[y] += c;
                        t.count_z[z] += c;
                        t.count_yz[y * k + z] += c;
                        t.n_records += c;
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_subgroups(&self) -> usize {
        self.num_subgroups
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn n_records(&self) -> u64 {
        self.n_records
    }

    /// A table is usable once it holds at least one record.
    pub fn usable(&self) -> bool {
        self.n_records > 0
    }

    pub fn count(&self, m: usize, y: usize, b: usize) -> u64 {
        self.counts[(m * self.num_classes + y) * self.bins + b]
    }

    pub fn count_sub(&self, m: usize, y: usize, z: usize, b: usize) -> u64 {
        self.counts_sub[((m * self.num_classes + y) * self.num_subgroups + z) * self.bins + b]
    }

    pub fn total_my(&self, m: usize, y: usize) -> u64 {
        self.totals_my[m * self.num_classes + y]
    }

    pub fn total_myz(&self, m: usize, y: usize, z: usize) -> u64 {
        self.totals_myz[(m * self.num_classes + y) * self.num_subgroups + z]
    }

    pub fn count_yz(&self, y: usize, z: usize) -> u64 {
        self.count_yz[y * self.num_subgroups + z]
    }

    pub fn count_z(&self, z: usize) -> u64 {
        self.count_z[z]
    }

    /// `Pr̂[b | y, m]`; `None` when no record with (y, m) was observed.
    pub fn cond(&self, m: usize, y: usize, b: usize) -> Option<f64> {
        let total = self.total_my(m, y);
        if total == 0 {
            None
        } else {
            Some(self.count(m, y, b) as f64 / total as f64)
        }
    }

    /// `Pr̂[b | y, z, m]`; `None` when no record with (y, z, m) was observed.
    pub fn cond_sub(&self, m: usize, y: usize, z: usize, b: usize) -> Option<f64> {
        let total = self.total_myz(m, y, z);
        if total == 0 {
            None
        } else {
            Some(self.count_sub(m, y, z, b) as f64 / total as f64)
        }
    }

    /// Model-output gap `γ(b, y) = Pr̂[b|y,1] − Pr̂[b|y,0]`; `None` when
    /// either conditional is undefined.
    pub fn gap(&self, y: usize, b: usize) -> Option<f64> {
        Some(self.cond(1, y, b)? - self.cond(0, y, b)?)
    }

    /// Subgroup gap `γ_z(b, y)`; `None` when either conditional is undefined.
    pub fn gap_sub(&self, y: usize, z: usize, b: usize) -> Option<f64> {
        Some(self.cond_sub(1, y, z, b)? - self.cond_sub(0, y, z, b)?)
    }

    /// Marginal `Pr̂[y]`.
    pub fn pr_y(&self, y: usize) -> f64 {
        if self.n_records == 0 {
            0.0
        } else {
            self.count_y[y] as f64 / self.n_records as f64
        }
    }

    /// Marginal `Pr̂[z]`.
    pub fn pr_z(&self, z: usize) -> f64 {
        if self.n_records == 0 {
            0.0
        } else {
            self.count_z[z] as f64 / self.n_records as f64
        }
    }

    /// Joint marginal `Pr̂[y, z]`.
    pub fn pr_yz(&self, y: usize, z: usize) -> f64 {
        if self.n_records == 0 {
            0.0
        } else {
            self.count_yz(y, z) as f64 / self.n_records as f64
        }
    }

    /// Class bias `ρ̂_z(y) = Pr̂[y | z]`; `None` for absent subgroups.
    pub fn rho(&self, y: usize, z: usize) -> Option<f64> {
        let cz = self.count_z[z];
        if cz == 0 {
            None
        } else {
            Some(self.count_yz(y, z) as f64 / cz as f64)
        }
    }

    /// True when this table is an exact tally of `set`.
    pub fn matches(&self, set: &EvaluationSet) -> bool {
        estimate_tables(set) == *self
    }

    /// Record counts per (y, z, m) cell, for report metadata.
    pub fn cell_counts(&self) -> Vec<CellCount> {
        let mut out = Vec::new();
        for y in 0..self.num_classes {
            for z in 0..self.num_subgroups {
                for m in 0..2 {
                    let c = self.total_myz(m, y, z);
                    if c > 0 {
                        out.push(CellCount { y, z, m, count: c });
                    }
                }
            }
        }
        out
    }

    /// Test hook: overwrite one coarse joint count, deliberately breaking
    /// the fine-to-coarse summation invariant. Used as a negative control
    /// for the identity suite.
    #[doc(hidden)]
    pub fn corrupt_joint_count_for_test(&mut self, m: usize, y: usize, b: usize, value: u64) {
        self.counts[(m * self.num_classes + y) * self.bins + b] = value;
    }
}

/// Record count of one (y, z, m) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub y: usize,
    pub z: usize,
    pub m: usize,
    pub count: u64,
}
