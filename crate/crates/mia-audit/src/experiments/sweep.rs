//! Subgroup-size and equal-representation sweeps over synthetic populations.

use serde::{Deserialize, Serialize};

use super::recipe::ModelRecipe;
use super::shuffle::{run_shuffle_study, Aggregate, StudyConfig};
use super::synth::{synth_generate, SyntheticSpec};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// One target subgroup's size varies; all others stay fixed.
    SubgroupSize,
    /// Every subgroup is sampled at the same size K.
    EqualRepresentation,
}

/// Vulnerability curves measured at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub grid_value: usize,
    pub regular_by_subgroup: Vec<Aggregate>,
    pub discriminating_by_subgroup: Vec<Aggregate>,
    pub regular_overall: Aggregate,
    pub discriminating_overall: Aggregate,
    pub test_accuracy: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    /// Target subgroup for size sweeps.
    pub target: Option<usize>,
    pub grid: Vec<usize>,
    pub points: Vec<SweepPoint>,
}

fn run_point(
    spec: &SyntheticSpec,
    recipe: ModelRecipe,
    study_cfg: &StudyConfig,
    grid_value: usize,
) -> Result<SweepPoint> {
    let pop = synth_generate(spec)?;
    let study = run_shuffle_study(&pop, recipe, study_cfg)?;
    Ok(SweepPoint {
        grid_value,
        regular_by_subgroup: study.aggregate.regular.by_subgroup.clone(),
        discriminating_by_subgroup: study.aggregate.discriminating.by_subgroup.clone(),
        regular_overall: study.aggregate.regular.vulnerability,
        discriminating_overall: study.aggregate.discriminating.vulnerability,
        test_accuracy: study.aggregate.test_accuracy,
    })
}

fn validate_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(AuditError::validation("sweep grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AuditError::validation(
            "sweep grid must be strictly increasing",
        ));
    }
    Ok(())
}

/// Sweeps the size of one target subgroup while every other subgroup (and
/// every generative parameter) stays fixed; the fixed-shape invariant is
/// enforced with a spec fingerprint.
pub fn subgroup_size_sweep(
    spec: &SyntheticSpec,
    target: usize,
    grid: &[usize],
    recipe: ModelRecipe,
    study_cfg: &StudyConfig,
) -> Result<SweepResult> {
    spec.validate()?;
    validate_grid(grid)?;
    if target >= spec.num_subgroups() {
        return Err(AuditError::validation(format!(
            "target subgroup {target} out of range (k = {})",
            spec.num_subgroups()
        )));
    }
    let min_cell = grid[0] as f64
        * spec.subgroups[target]
            .class_weights
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
    if min_cell < 4.0 {
        return Err(AuditError::validation(format!(
            "smallest grid size {} leaves the target subgroup with under 4 examples in a class cell",
            grid[0]
        )));
    }
    let fingerprint = spec.shape_fingerprint();
    let mut points = Vec::with_capacity(grid.len());
    for &size in grid {
        let mut point_spec = spec.clone();
        point_spec.subgroups[target].size = size;
        debug_assert_eq!(point_spec.shape_fingerprint(), fingerprint);
        points.push(run_point(&point_spec, recipe, study_cfg, size)?);
    }
    Ok(SweepResult {
        kind: SweepKind::SubgroupSize,
        target: Some(target),
        grid: grid.to_vec(),
        points,
    })
}

/// Sweeps a common per-subgroup size K across all subgroups.
pub fn equal_representation_sweep(
    spec: &SyntheticSpec,
    k_grid: &[usize],
    recipe: ModelRecipe,
    study_cfg: &StudyConfig,
) -> Result<SweepResult> {
    spec.validate()?;
    validate_grid(k_grid)?;
    let fingerprint = spec.shape_fingerprint();
    let mut points = Vec::with_capacity(k_grid.len());
    for &size in k_grid {
        let mut point_spec = spec.clone();
        for sg in &mut point_spec.subgroups {
            sg.size = size;
        }
        debug_assert_eq!(point_spec.shape_fingerprint(), fingerprint);
        points.push(run_point(&point_spec, recipe, study_cfg, size)?);
    }
    Ok(SweepResult {
        kind: SweepKind::EqualRepresentation,
        target: None,
        grid: k_grid.to_vec(),
        points,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut ranks = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &pos in &idx[i..=j] {
                ranks[pos] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
