//! Membership-inference auditing with per-subgroup vulnerability analysis.
//!
//! The crate measures how accurately Bayes-optimal membership adversaries
//! can tell a classifier's training examples from held-out ones — overall,
//! per subgroup, and as pairwise disparity between subgroups — and computes
//! the distributional-overfitting quantities (model-output gaps, total
//! variation, class bias) that account for those measurements exactly.
//!
//! The typical pipeline:
//!
//! 1. load or generate a labeled [`population::Population`];
//! 2. train a target model ([`models`]) on a stratified split;
//! 3. build a balanced [`evalset::EvaluationSet`] from the model's
//!    confidence outputs on members and non-members;
//! 4. tally a [`freq::FrequencyTable`], fit both [`adversary`] rules and
//!    score them;
//! 5. compute the [`overfit`] profile and verify the closed-form
//!    [`identities`] connecting the two views;
//! 6. repeat over shuffles and test significance ([`experiments`]).
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `mia-audit` binary for the batch command-line front end.

pub mod adversary;
pub mod cli;
pub mod error;
pub mod evalset;
pub mod experiments;
pub mod freq;
pub mod identities;
pub mod ingest;
pub mod models;
pub mod overfit;
pub mod population;
pub mod report;
pub mod tablegen;

pub use adversary::{
    audit_set, compare_adversaries, evaluate_vulnerability, fit_discriminating_adversary,
    fit_regular_adversary, AdversaryKind, AdversaryReport, DecisionRule, VulnerabilityReport,
};
pub use error::{AuditError, Result};
pub use evalset::{
    build_evaluation_set, discretize_confidence, AuditRecord, BuildOutcome, EvaluationSet,
};
pub use freq::{estimate_tables, FrequencyTable};
pub use identities::{verify_identities, IdentityReport, IDENTITY_TOL};
pub use overfit::{
    closed_form_subgroup_vulnerability, closed_form_vulnerability, compute_gaps, compute_profile,
    disparity_residuals, geo_check, geo_no_bias_implication_check, GapTensor, OverfitProfile,
};
pub use population::{LabeledExample, Population};
