//! Equalized-odds post-processing for binary classifiers.
//!
//! Each subgroup gets a randomized policy mixing three components — the
//! thresholded base classifier, constant-reject, and constant-accept — with
//! weights chosen so every subgroup operates at one common (FPR, TPR) point.
//! Candidate target points are enumerated from the groups' ROC points over
//! a finite threshold grid; for a fixed target, the mixing weights solve a
//! small linear system exactly, so the search is exhaustive rather than an
//! LP relaxation.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::linear::LinearModel;
use crate::error::{AuditError, Result};

/// Mixing weights for one subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMix {
    pub threshold: f64,
    pub w_threshold: f64,
    pub w_const0: f64,
    pub w_const1: f64,
    pub achieved_fpr: f64,
    pub achieved_tpr: f64,
}

/// Per-group randomized acceptance policy at a common operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EoPolicy {
    pub groups: Vec<GroupMix>,
    pub target_fpr: f64,
    pub target_tpr: f64,
}

impl EoPolicy {
    /// Probability of predicting the positive class for a score from
    /// subgroup `z`.
    pub fn accept_probability(&self, score: f64, z: usize) -> f64 {
        let mix = &self.groups[z.min(self.groups.len() - 1)];
        let thresholded = if score >= mix.threshold { 1.0 } else { 0.0 };
        mix.w_threshold * thresholded + mix.w_const1
    }
}

#[derive(Debug, Clone)]
struct GroupRates {
    /// (FPR, TPR) per grid threshold.
    roc: Vec<(f64, f64)>,
    base_rate: f64,
    weight: f64,
}

fn group_rates(
    calibration: &[(f64, usize, usize)],
    thresholds: &[f64],
    k: usize,
) -> Result<Vec<GroupRates>> {
    let mut out = Vec::with_capacity(k);
    let total = calibration.len() as f64;
    for z in 0..k {
        let scores: Vec<(f64, usize)> = calibration
            .iter()
            .filter(|(_, _, gz)| *gz == z)
            .map(|&(s, y, _)| (s, y))
            .collect();
        let pos = scores.iter().filter(|(_, y)| *y == 1).count();
        let neg = scores.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(AuditError::validation(format!(
                "subgroup {z} lacks positives or negatives ({pos} / {neg}); equalized odds is undefined"
            )));
        }
        let roc = thresholds
            .iter()
            .map(|&t| {
                let tp = scores.iter().filter(|(s, y)| *y == 1 && *s >= t).count();
                let fp = scores.iter().filter(|(s, y)| *y == 0 && *s >= t).count();
                (fp as f64 / neg as f64, tp as f64 / pos as f64)
            })
            .collect();
        out.push(GroupRates {
            roc,
            base_rate: pos as f64 / scores.len() as f64,
            weight: scores.len() as f64 / total,
        });
    }
    Ok(out)
}

/// Best mixture for one group against a target point: returns the mix and
/// its L∞ distance to the target.
fn best_mix_for_target(
    rates: &GroupRates,
    thresholds: &[f64],
    target: (f64, f64),
) -> (GroupMix, f64) {
    let (tf, tt) = target;
    let mut best: Option<(GroupMix, f64)> = None;
    for (ti, &(fpr, tpr)) in rates.roc.iter().enumerate() {
        let denom = tpr - fpr;
        let w_t = if denom.abs() < 1e-12 {
            0.0
        } else {
            ((tt - tf) / denom).clamp(0.0, 1.0)
        };
        let w_1 = (tf - w_t * fpr).clamp(0.0, 1.0 - w_t);
        let w_0 = 1.0 - w_t - w_1;
        let achieved = (w_t * fpr + w_1, w_t * tpr + w_1);
        let dist = (achieved.0 - tf).abs().max((achieved.1 - tt).abs());
        let mix = GroupMix {
            threshold: thresholds[ti],
            w_threshold: w_t,
            w_const0: w_0,
            w_const1: w_1,
            achieved_fpr: achieved.0,
            achieved_tpr: achieved.1,
        };
        let better = match &best {
            None => true,
            Some((b, bd)) => {
                dist < bd - 1e-15 || (dist < bd + 1e-15 && mix.w_threshold > b.w_threshold + 1e-15)
            }
        };
        if better {
            best = Some((mix, dist));
        }
    }
    best.expect("threshold grid is non-empty")
}

/// Fits per-group mixing policies so that every subgroup's calibration
/// (FPR, TPR) lies within `tol` of a common target point, minimizing the
/// overall classification error among the candidate targets.
pub fn eo_postprocess(
    calibration: &[(f64, usize, usize)],
    thresholds: &[f64],
    tol: f64,
) -> Result<EoPolicy> {
    if calibration.is_empty() || thresholds.is_empty() {
        return Err(AuditError::validation(
            "equalized-odds post-processing needs calibration data and a threshold grid",
        ));
    }
    if calibration.iter().any(|(_, y, _)| *y > 1) {
        return Err(AuditError::validation(
            "equalized odds requires a binary task",
        ));
    }
    let k = calibration.iter().map(|(_, _, z)| *z).max().unwrap() + 1;
    let rates = group_rates(calibration, thresholds, k)?;

    // Candidate operating points: every group's ROC points plus the
    // random-guessing diagonal.
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for g in &rates {
        candidates.extend(g.roc.iter().copied());
    }
    candidates.extend((0..=20).map(|i| (i as f64 / 20.0, i as f64 / 20.0)));

    let mut best: Option<(EoPolicy, f64)> = None;
    let mut best_gap = f64::INFINITY;
    for &(tf, tt) in &candidates {
        let mut mixes = Vec::with_capacity(k);
        let mut gap = 0.0f64;
        for g in &rates {
            let (mix, dist) = best_mix_for_target(g, thresholds, (tf, tt));
            gap = gap.max(dist);
            mixes.push(mix);
        }
        best_gap = best_gap.min(gap);
        if gap > tol {
            continue;
        }
        let error: f64 = rates
            .iter()
            .zip(&mixes)
            .map(|(g, m)| {
                g.weight
                    * (g.base_rate * (1.0 - m.achieved_tpr) + (1.0 - g.base_rate) * m.achieved_fpr)
            })
            .sum();
        if best.as_ref().is_none_or(|(_, e)| error < e - 1e-15) {
            best = Some((
                EoPolicy {
                    groups: mixes,
                    target_fpr: tf,
                    target_tpr: tt,
                },
                error,
            ));
        }
    }
    match best {
        Some((policy, _)) => Ok(policy),
        None => Err(AuditError::EoInfeasible { best_gap, tol }),
    }
}

/// A binary linear classifier post-processed by an equalized-odds policy.
///
/// The confidence output is the policy's acceptance probability, so the
/// model stays a deterministic map from (features, subgroup) to a
/// distribution over the two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EoModel {
    pub base: LinearModel,
    pub policy: EoPolicy,
}

impl EoModel {
    pub fn num_classes(&self) -> usize {
        2
    }

    pub fn feature_dim(&self) -> usize {
        self.base.feature_dim()
    }

    pub fn confidences(&self, x: ArrayView2<f64>, subgroups: &[usize]) -> Result<Array2<f64>> {
        if subgroups.len() != x.nrows() {
            return Err(AuditError::validation(format!(
                "subgroup vector length {} does not match batch size {}",
                subgroups.len(),
                x.nrows()
            )));
        }
        let base = self.base.confidences(x)?;
        let mut out = Array2::zeros((x.nrows(), 2));
        for (i, &z) in subgroups.iter().enumerate() {
            let q = self.policy.accept_probability(base[(i, 1)], z);
            out[(i, 0)] = 1.0 - q;
            out[(i, 1)] = q;
        }
        Ok(out)
    }
}
