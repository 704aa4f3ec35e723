//! Repeated-shuffle audit studies.
//!
//! One shuffle = one stratified train/test split, one trained model, one
//! balanced evaluation set, both adversaries fitted and scored on it.
//! A study repeats this for seeds `base_seed + i` and aggregates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recipe::ModelRecipe;
use crate::adversary::{audit_set, AdversaryKind, VulnerabilityReport};
use crate::error::{AuditError, Result};
use crate::evalset::{build_evaluation_set, DroppedCell};
use crate::freq::estimate_tables;
use crate::freq::CellCount;
use crate::identities::{verify_identities_with_report, IdentityReport, IDENTITY_TOL};
use crate::models::{accuracy, feature_matrix};
use crate::overfit::{compute_gaps, compute_profile, GapTensor, OverfitProfile};
use crate::population::{LabeledExample, Population};

/// Study-level knobs shared by every shuffle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_shuffles: usize,
    pub base_seed: u64,
    pub bins: usize,
    /// Fraction of each (y, z) cell that becomes training members.
    pub train_fraction: f64,
    /// Optional cap on the training-set size (members are subsampled
    /// proportionally per cell).
    pub max_train: Option<usize>,
    /// When set, each shuffle's evaluation set is exported here as
    /// `eval_<shuffle>.csv` (`id,y,z,m,bin`).
    pub export_eval_dir: Option<std::path::PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_shuffles: 35,
            base_seed: 0,
            bins: 10,
            train_fraction: 0.5,
            max_train: None,
            export_eval_dir: None,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_shuffles == 0 {
            return Err(AuditError::validation("a study needs at least one shuffle"));
        }
        if self.bins < 2 {
            return Err(AuditError::validation("bin count must be at least 2"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(AuditError::validation(
                "train fraction must lie strictly between 0 and 1",
            ));
        }
        Ok(())
    }
}

/// Per-record audit outcome kept for significance testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub z: u32,
    pub correct_regular: bool,
    pub correct_discriminating: bool,
}

/// Everything measured on one shuffle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleResult {
    pub shuffle: usize,
    pub seed: u64,
    /// `None` when the study audits precomputed confidences with no model.
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub report: VulnerabilityReport,
    pub profile: OverfitProfile,
    /// Subgroup gap tensor, exported for plotting.
    pub gaps_export: GapTensor,
    pub identity: IdentityReport,
    pub outcomes: Vec<RecordOutcome>,
    pub eval_size: usize,
    pub cell_counts: Vec<CellCount>,
    pub dropped_cells: Vec<DroppedCell>,
}

/// Mean and sample standard deviation over shuffles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    /// Number of shuffles the metric was defined on.
    pub n: usize,
}

pub(crate) fn aggregate(values: impl Iterator<Item = Option<f64>>) -> Aggregate {
    let defined: Vec<f64> = values.flatten().collect();
    let n = defined.len();
    if n == 0 {
        return Aggregate {
            mean: f64::NAN,
            std: f64::NAN,
            n,
        };
    }
    let mean = defined.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (defined.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Aggregate { mean, std, n }
}

/// Study-level summary per adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryAggregate {
    pub vulnerability: Aggregate,
    pub max_disparity: Aggregate,
    pub by_subgroup: Vec<Aggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyAggregate {
    pub test_accuracy: Aggregate,
    pub train_accuracy: Aggregate,
    /// train − test accuracy.
    pub overfitting: Aggregate,
    pub regular: AdversaryAggregate,
    pub discriminating: AdversaryAggregate,
}

/// All shuffles plus their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleStudy {
    pub config: StudyConfig,
    pub num_classes: usize,
    pub num_subgroups: usize,
    pub results: Vec<ShuffleResult>,
    pub aggregate: StudyAggregate,
}

impl ShuffleStudy {
    pub(crate) fn from_results(
        config: StudyConfig,
        num_classes: usize,
        num_subgroups: usize,
        results: Vec<ShuffleResult>,
    ) -> Self {
        let k = num_subgroups;
        fn pick(r: &ShuffleResult, kind: AdversaryKind) -> &crate::adversary::AdversaryReport {
            match kind {
                AdversaryKind::Regular => &r.report.regular,
                AdversaryKind::Discriminating => &r.report.discriminating,
            }
        }
        let agg_adv = |kind: AdversaryKind| -> AdversaryAggregate {
            AdversaryAggregate {
                vulnerability: aggregate(results.iter().map(|r| Some(pick(r, kind).vulnerability))),
                max_disparity: aggregate(results.iter().map(|r| pick(r, kind).max_disparity)),
                by_subgroup: (0..k)
                    .map(|z| aggregate(results.iter().map(|r| pick(r, kind).by_subgroup[z])))
                    .collect(),
            }
        };
        let aggregate_all = StudyAggregate {
            test_accuracy: aggregate(results.iter().map(|r| r.test_accuracy)),
            train_accuracy: aggregate(results.iter().map(|r| r.train_accuracy)),
            overfitting: aggregate(
                results
                    .iter()
                    .map(|r| Some(r.train_accuracy? - r.test_accuracy?)),
            ),
            regular: agg_adv(AdversaryKind::Regular),
            discriminating: agg_adv(AdversaryKind::Discriminating),
        };
        ShuffleStudy {
            config,
            num_classes,
            num_subgroups,
            results,
            aggregate: aggregate_all,
        }
    }

    /// True when every shuffle's identity suite passed.
    pub fn identities_pass(&self) -> bool {
        self.results.iter().all(|r| r.identity.all_pass())
    }
}

/// Stratified split of a population into member (train) and non-member
/// pools: per (y, z) cell, a seeded shuffle takes `round(len · fraction)`
/// members, where the fraction is reduced if `max_train` caps the total.
fn stratified_split<'p>(
    pop: &'p Population,
    cfg: &StudyConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<&'p LabeledExample>, Vec<&'p LabeledExample>) {
    let k = pop.num_subgroups;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); pop.num_classes * k];
    for (i, ex) in pop.examples.iter().enumerate() {
        cells[ex.y * k + ex.z].push(i);
    }
    let mut fraction = cfg.train_fraction;
    if let Some(cap) = cfg.max_train {
        fraction = fraction.min(cap as f64 / pop.len() as f64);
    }
    let mut members = Vec::new();
    let mut nonmembers = Vec::new();
    for cell in &mut cells {
        cell.shuffle(rng);
        let n_train = ((cell.len() as f64) * fraction).round() as usize;
        let n_train = n_train.min(cell.len());
        for (pos, &i) in cell.iter().enumerate() {
            if pos < n_train {
                members.push(&pop.examples[i]);
            } else {
                nonmembers.push(&pop.examples[i]);
            }
        }
    }
    (members, nonmembers)
}

fn run_one_shuffle(
    pop: &Population,
    recipe: ModelRecipe,
    cfg: &StudyConfig,
    shuffle: usize,
) -> Result<ShuffleResult> {
    let seed = cfg.base_seed.wrapping_add(shuffle as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (members, nonmembers) = stratified_split(pop, cfg, &mut rng);
    if members.is_empty() || nonmembers.is_empty() {
        return Err(AuditError::unusable(format!(
            "shuffle {shuffle}: split produced an empty side (train {} / test {})",
            members.len(),
            nonmembers.len()
        )));
    }
    let train: Vec<LabeledExample> = members.iter().map(|e| (*e).clone()).collect();
    let test: Vec<LabeledExample> = nonmembers.iter().map(|e| (*e).clone()).collect();
    let model = recipe
        .train(&train, seed)
        .map_err(|e| AuditError::unusable(format!("shuffle {shuffle}: {e}")))?;

    let confidences_of = |examples: &[LabeledExample]| -> Result<Vec<(LabeledExample, Vec<f64>)>> {
        let x = feature_matrix(examples);
        let z: Vec<usize> = examples.iter().map(|e| e.z).collect();
        let conf = model.confidences(x.view(), &z)?;
        Ok(examples
            .iter()
            .zip(conf.outer_iter())
            .map(|(ex, row)| (ex.clone(), row.to_vec()))
            .collect())
    };
    let member_pool = confidences_of(&train)?;
    let nonmember_pool = confidences_of(&test)?;

    let train_accuracy = Some(accuracy(&model, &train)?);
    let test_accuracy = Some(accuracy(&model, &test)?);

    let built = build_evaluation_set(
        &member_pool,
        &nonmember_pool,
        pop.num_classes,
        pop.num_subgroups,
        cfg.bins,
        seed,
    )
    .map_err(|e| AuditError::unusable(format!("shuffle {shuffle}: {e}")))?;
    audit_one(
        shuffle,
        seed,
        built,
        train_accuracy,
        test_accuracy,
        cfg.export_eval_dir.as_deref(),
    )
}

pub(crate) fn audit_one(
    shuffle: usize,
    seed: u64,
    built: crate::evalset::BuildOutcome,
    train_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    export_dir: Option<&std::path::Path>,
) -> Result<ShuffleResult> {
    let set = built.set;
    if let Some(dir) = export_dir {
        std::fs::create_dir_all(dir)?;
        set.write_csv(&dir.join(format!("eval_{shuffle}.csv")))?;
    }
    let table = estimate_tables(&set);
    let report = audit_set(&table, &set)?;
    let profile = compute_profile(&table);
    let gaps_export = compute_gaps(&table);
    let identity = verify_identities_with_report(&table, &set, &report, IDENTITY_TOL);
    let outcomes: Vec<RecordOutcome> = set
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| RecordOutcome {
            z: r.z as u32,
            correct_regular: report.regular.correct[i],
            correct_discriminating: report.discriminating.correct[i],
        })
        .collect();
    Ok(ShuffleResult {
        shuffle,
        seed,
        train_accuracy,
        test_accuracy,
        report,
        profile,
        gaps_export,
        identity,
        outcomes,
        eval_size: set.len(),
        cell_counts: table.cell_counts(),
        dropped_cells: built.dropped,
    })
}

/// Runs the full repeated-shuffle audit protocol.
pub fn run_shuffle_study(
    pop: &Population,
    recipe: ModelRecipe,
    cfg: &StudyConfig,
) -> Result<ShuffleStudy> {
    cfg.validate()?;
    if pop.is_empty() {
        return Err(AuditError::unusable("population is empty"));
    }
    let results: Result<Vec<ShuffleResult>> = (0..cfg.n_shuffles)
        .into_par_iter()
        .map(|i| run_one_shuffle(pop, recipe, cfg, i))
        .collect();
    Ok(ShuffleStudy::from_results(
        cfg.clone(),
        pop.num_classes,
        pop.num_subgroups,
        results?,
    ))
}

/// Audits precomputed confidence outputs (no model in the loop): each
/// shuffle resamples the balanced evaluation set from the supplied pools.
pub fn audit_confidence_pools(
    member_pool: &[(LabeledExample, Vec<f64>)],
    nonmember_pool: &[(LabeledExample, Vec<f64>)],
    num_classes: usize,
    num_subgroups: usize,
    cfg: &StudyConfig,
) -> Result<ShuffleStudy> {
    cfg.validate()?;
    let results: Result<Vec<ShuffleResult>> = (0..cfg.n_shuffles)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.base_seed.wrapping_add(i as u64);
            let built = build_evaluation_set(
                member_pool,
                nonmember_pool,
                num_classes,
                num_subgroups,
                cfg.bins,
                seed,
            )?;
            audit_one(i, seed, built, None, None, cfg.export_eval_dir.as_deref())
        })
        .collect();
    Ok(ShuffleStudy::from_results(
        cfg.clone(),
        num_classes,
        num_subgroups,
        results?,
    ))
}
