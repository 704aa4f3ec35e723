//! Permutation tests for disparate vulnerability.
//!
//! Subgroup labels are permuted within each shuffle, preserving the shuffle
//! structure of the study, and the disparity statistic is recomputed under
//! each permutation. The p-value uses the add-one estimator
//! `p = (1 + #{perm ≥ observed}) / (1 + n_permutations)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shuffle::{RecordOutcome, ShuffleStudy};
use crate::adversary::AdversaryKind;
use crate::error::{AuditError, Result};

/// Minimum permutation count; anything lower cannot resolve small p-values.
pub const MIN_PERMUTATIONS: usize = 99;

/// Which disparity statistic the test targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisparityStat {
    /// |mean over shuffles of (V̂_z1 − V̂_z2)|.
    Pair { z1: usize, z2: usize },
    /// Mean over shuffles of the within-shuffle max pairwise disparity.
    MaxDisparity,
}

/// The per-record indicators a permutation test needs: one vector of
/// (subgroup, correctness) per shuffle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcomes {
    pub num_subgroups: usize,
    pub shuffles: Vec<Vec<RecordOutcome>>,
}

impl From<&ShuffleStudy> for StudyOutcomes {
    fn from(study: &ShuffleStudy) -> Self {
        StudyOutcomes {
            num_subgroups: study.num_subgroups,
            shuffles: study.results.iter().map(|r| r.outcomes.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub adversary: AdversaryKind,
    pub statistic: DisparityStat,
    pub observed: f64,
    pub p_value: f64,
    pub n_permutations: usize,
}

fn correctness(outcome: &RecordOutcome, kind: AdversaryKind) -> bool {
    match kind {
        AdversaryKind::Regular => outcome.correct_regular,
        AdversaryKind::Discriminating => outcome.correct_discriminating,
    }
}

/// Per-subgroup mean correctness within one shuffle, under a label vector.
fn subgroup_means(
    outcomes: &[RecordOutcome],
    labels: &[u32],
    kind: AdversaryKind,
    k: usize,
) -> Vec<Option<f64>> {
    let mut hits = vec![0u64; k];
    let mut totals = vec![0u64; k];
    for (o, &z) in outcomes.iter().zip(labels) {
        totals[z as usize] += 1;
        if correctness(o, kind) {
            hits[z as usize] += 1;
        }
    }
    (0..k)
        .map(|z| {
            if totals[z] == 0 {
                None
            } else {
                Some(hits[z] as f64 / totals[z] as f64)
            }
        })
        .collect()
}

fn statistic(
    outcomes: &StudyOutcomes,
    labels: &[Vec<u32>],
    kind: AdversaryKind,
    stat: DisparityStat,
) -> Result<f64> {
    let k = outcomes.num_subgroups;
    match stat {
        DisparityStat::Pair { z1, z2 } => {
            let mut diffs = Vec::new();
            for (shuffle, lab) in outcomes.shuffles.iter().zip(labels) {
                let means = subgroup_means(shuffle, lab, kind, k);
                if let (Some(a), Some(b)) = (means[z1], means[z2]) {
                    diffs.push(a - b);
                }
            }
            if diffs.is_empty() {
                return Err(AuditError::MissingSubgroup {
                    subgroup: if outcomes
                        .shuffles
                        .iter()
                        .zip(labels)
                        .all(|(s, l)| subgroup_means(s, l, kind, k)[z1].is_none())
                    {
                        z1
                    } else {
                        z2
                    },
                });
            }
            Ok((diffs.iter().sum::<f64>() / diffs.len() as f64).abs())
        }
        DisparityStat::MaxDisparity => {
            let mut per_shuffle = Vec::new();
            for (shuffle, lab) in outcomes.shuffles.iter().zip(labels) {
                let means = subgroup_means(shuffle, lab, kind, k);
                let mut max = None;
                for a in 0..k {
                    for b in (a + 1)..k {
                        if let (Some(va), Some(vb)) = (means[a], means[b]) {
                            let d = (va - vb).abs();
                            max = Some(max.map_or(d, |m: f64| m.max(d)));
                        }
                    }
                }
                if let Some(m) = max {
                    per_shuffle.push(m);
                }
            }
            if per_shuffle.is_empty() {
                return Err(AuditError::unusable(
                    "no shuffle has two populated subgroups; max-disparity is undefined",
                ));
            }
            Ok(per_shuffle.iter().sum::<f64>() / per_shuffle.len() as f64)
        }
    }
}

/// Runs the within-shuffle label-permutation test.
pub fn permutation_disparity_test(
    outcomes: &StudyOutcomes,
    kind: AdversaryKind,
    stat: DisparityStat,
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationTest> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(AuditError::validation(format!(
            "need at least {MIN_PERMUTATIONS} permutations for usable resolution, got {n_permutations}"
        )));
    }
    if let DisparityStat::Pair { z1, z2 } = stat {
        let k = outcomes.num_subgroups;
        if z1 >= k || z2 >= k || z1 == z2 {
            return Err(AuditError::validation(format!(
                "invalid subgroup pair ({z1}, {z2}) for k = {k}"
            )));
        }
    }
    let original: Vec<Vec<u32>> = outcomes
        .shuffles
        .iter()
        .map(|s| s.iter().map(|o| o.z).collect())
        .collect();
    let observed = statistic(outcomes, &original, kind, stat)?;

    let exceed: usize = (0..n_permutations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(i as u64)
                    .wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            let mut permuted = original.clone();
            for labels in &mut permuted {
                labels.shuffle(&mut rng);
            }
            match statistic(outcomes, &permuted, kind, stat) {
                Ok(s) if s >= observed => 1usize,
                _ => 0,
            }
        })
        .sum();
    Ok(PermutationTest {
        adversary: kind,
        statistic: stat,
        observed,
        p_value: (1 + exceed) as f64 / (1 + n_permutations) as f64,
        n_permutations,
    })
}
