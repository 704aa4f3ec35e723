//! Experimental protocols: repeated-shuffle audits, permutation tests for
//! disparate vulnerability, and subgroup sweeps on synthetic populations.

mod permutation;
mod recipe;
mod shuffle;
mod sweep;
pub mod synth;

pub use permutation::{
    permutation_disparity_test, DisparityStat, PermutationTest, StudyOutcomes, MIN_PERMUTATIONS,
};
pub use recipe::ModelRecipe;
pub use shuffle::{
    audit_confidence_pools, run_shuffle_study, AdversaryAggregate, Aggregate, RecordOutcome,
    ShuffleResult, ShuffleStudy, StudyAggregate, StudyConfig,
};
pub use sweep::{
    equal_representation_sweep, spearman, subgroup_size_sweep, SweepKind, SweepPoint, SweepResult,
};
pub use synth::{synth_generate, CellSpec, SubgroupSpec, SyntheticSpec};
