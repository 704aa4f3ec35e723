//! Bayes-optimal membership adversaries and vulnerability measurement.
//!
//! The regular adversary observes the true label and the discretized model
//! output; the discriminating adversary additionally observes the subgroup.
//! Both are fit as empirical Bayes rules from a [`FrequencyTable`]: predict
//! "member" exactly when the member conditional strictly exceeds the
//! non-member conditional (ties and unseen cells predict "non-member").

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::evalset::EvaluationSet;
use crate::freq::FrequencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryKind {
    Regular,
    Discriminating,
}

impl std::fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdversaryKind::Regular => write!(f, "regular"),
            AdversaryKind::Discriminating => write!(f, "discriminating"),
        }
    }
}

/// A fitted membership decision rule.
///
/// Regular rules map (y, b) to a membership guess; discriminating rules map
/// (y, b, z). Cells never observed during estimation fall back to the fixed
/// policy output 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    kind: AdversaryKind,
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
    /// Regular: `[y][b]`; discriminating: `[y][z][b]`.
    decisions: Vec<bool>,
}

impl DecisionRule {
    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    /// Membership guess for a record; out-of-range cells return 0.
    pub fn decide(&self, y: usize, b: usize, z: usize) -> u8 {
        if y >= self.num_classes || b >= self.bins {
            return 0;
        }
        let idx = match self.kind {
            AdversaryKind::Regular => y * self.bins + b,
            AdversaryKind::Discriminating => {
                if z >= self.num_subgroups {
                    return 0;
                }
                (y * self.num_subgroups + z) * self.bins + b
            }
        };
        self.decisions[idx] as u8
    }
}

/// Fits the regular Bayes adversary: decide 1 iff `γ(b, y) > 0`.
pub fn fit_regular_adversary(table: &FrequencyTable) -> Result<DecisionRule> {
    if !table.usable() {
        return Err(AuditError::unusable(
            "cannot fit an adversary on an empty table",
        ));
    }
    let (p, bins) = (table.num_classes(), table.bins());
    let mut decisions = vec![false; p * bins];
    for y in 0..p {
        for b in 0..bins {
            decisions[y * bins + b] = matches!(table.gap(y, b), Some(g) if g > 0.0);
        }
    }
    Ok(DecisionRule {
        kind: AdversaryKind::Regular,
        num_classes: p,
        num_subgroups: table.num_subgroups(),
        bins,
        decisions,
    })
}

/// Fits the discriminating Bayes adversary: decide 1 iff `γ_z(b, y) > 0`.
pub fn fit_discriminating_adversary(table: &FrequencyTable) -> Result<DecisionRule> {
    if !table.usable() {
        return Err(AuditError::unusable(
            "cannot fit an adversary on an empty table",
        ));
    }
    let (p, k, bins) = (table.num_classes(), table.num_subgroups(), table.bins());
    let mut decisions = vec![false; p * k * bins];
    for y in 0..p {
        for z in 0..k {
            for b in 0..bins {
                decisions[(y * k + z) * bins + b] =
                    matches!(table.gap_sub(y, z, b), Some(g) if g > 0.0);
            }
        }
    }
    Ok(DecisionRule {
        kind: AdversaryKind::Discriminating,
        num_classes: p,
        num_subgroups: k,
        bins,
        decisions,
    })
}

/// Vulnerability of one adversary on one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub kind: AdversaryKind,
    /// Overall adversary accuracy.
    pub vulnerability: f64,
    /// Per-subgroup accuracy; `None` for subgroups absent from the set.
    pub by_subgroup: Vec<Option<f64>>,
    /// Pairwise |V̂_z − V̂_z'|; symmetric, zero diagonal, `None` when either
    /// subgroup is undefined.
    pub disparity: Vec<Vec<Option<f64>>>,
    /// Largest defined off-diagonal disparity; `None` with < 2 subgroups.
    pub max_disparity: Option<f64>,
    /// Per-record correctness indicators, aligned with the set's records.
    #[serde(skip)]
    pub correct: Vec<bool>,
}

/// Scores a fitted rule on an evaluation set.
///
/// The default audit protocol evaluates the rule on the same set used for
/// estimation; passing a different compatible set gives held-out behavior.
pub fn evaluate_vulnerability(rule: &DecisionRule, set: &EvaluationSet) -> Result<AdversaryReport> {
    if set.is_empty() {
        return Err(AuditError::unusable("cannot evaluate on an empty set"));
    }
    if rule.num_classes != set.num_classes() || rule.bins != set.bins() {
        return Err(AuditError::validation(format!(
            "rule fitted for (p={}, B={}) cannot score a set with (p={}, B={})",
            rule.num_classes,
            rule.bins,
            set.num_classes(),
            set.bins()
        )));
    }
    let k = set.num_subgroups();
    let mut correct = Vec::with_capacity(set.len());
    let mut hits = vec![0u64; k];
    let mut totals = vec![0u64; k];
    for r in set.records() {
        let ok = rule.decide(r.y, r.bin, r.z) == r.m;
        correct.push(ok);
        totals[r.z] += 1;
        if ok {
            hits[r.z] += 1;
        }
    }
    let total: u64 = totals.iter().sum();
    let hit: u64 = hits.iter().sum();
    let by_subgroup: Vec<Option<f64>> = (0..k)
        .map(|z| {
            if totals[z] == 0 {
                None
            } else {
                Some(hits[z] as f64 / totals[z] as f64)
            }
        })
        .collect();
    let mut disparity = vec![vec![None; k]; k];
    let mut max_disparity: Option<f64> = None;
    for a in 0..k {
        if by_subgroup[a].is_some() {
            disparity[a][a] = Some(0.0);
        }
        for b in (a + 1)..k {
            if let (Some(va), Some(vb)) = (by_subgroup[a], by_subgroup[b]) {
                let d = (va - vb).abs();
                disparity[a][b] = Some(d);
                disparity[b][a] = Some(d);
                max_disparity = Some(max_disparity.map_or(d, |m: f64| m.max(d)));
            }
        }
    }
    Ok(AdversaryReport {
        kind: rule.kind,
        vulnerability: hit as f64 / total as f64,
        by_subgroup,
        disparity,
        max_disparity,
        correct,
    })
}

/// Combined audit result for both adversaries on one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    pub regular: AdversaryReport,
    pub discriminating: AdversaryReport,
}

/// Fits and scores both adversaries on the set the table was estimated from.
pub fn audit_set(table: &FrequencyTable, set: &EvaluationSet) -> Result<VulnerabilityReport> {
    let regular = evaluate_vulnerability(&fit_regular_adversary(table)?, set)?;
    let discriminating = evaluate_vulnerability(&fit_discriminating_adversary(table)?, set)?;
    Ok(VulnerabilityReport {
        regular,
        discriminating,
    })
}

/// Fits both adversaries on `table`, scores them on `set`, and returns
/// `(V̂ᴿ, V̂ᴰ, V̂ᴰ − V̂ᴿ)`. The table must be the exact tally of the set;
/// in-sample Bayes dominance then guarantees `V̂ᴰ ≥ V̂ᴿ`.
pub fn compare_adversaries(table: &FrequencyTable, set: &EvaluationSet) -> Result<(f64, f64, f64)> {
    if !table.matches(set) {
        return Err(AuditError::validation(
            "frequency table is not the tally of the given evaluation set",
        ));
    }
    let report = audit_set(table, set)?;
    let (vr, vd) = (
        report.regular.vulnerability,
        report.discriminating.vulnerability,
    );
    Ok((vr, vd, vd - vr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalset::AuditRecord;
    use crate::freq::estimate_tables;

    fn record(id: usize, y: usize, z: usize, m: u8, bin: usize) -> AuditRecord {
        AuditRecord {
            id: format!("r{id}"),
            y,
            z,
            m,
            bin,
        }
    }

    fn set_from(
        bins: usize,
        p: usize,
        k: usize,
        rows: &[(usize, usize, u8, usize)],
    ) -> EvaluationSet {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, &(y, z, m, b))| record(i, y, z, m, b))
            .collect();
        EvaluationSet::from_records(records, p, k, bins, 0).unwrap()
    }

    fn eight_record_set() -> EvaluationSet {
        set_from(
            2,
            1,
            1,
            &[
                (0, 0, 1, 1),
                (0, 0, 1, 1),
                (0, 0, 1, 1),
                (0, 0, 1, 0),
                (0, 0, 0, 1),
                (0, 0, 0, 0),
                (0, 0, 0, 0),
                (0, 0, 0, 0),
            ],
        )
    }

    #[test]
    fn regular_rule_follows_gap_sign() {
        let set = eight_record_set();
        let rule = fit_regular_adversary(&estimate_tables(&set)).unwrap();
        assert_eq!(rule.decide(0, 1, 0), 1); // γ = 0.5
        assert_eq!(rule.decide(0, 0, 0), 0); // γ = -0.5
    }

    #[test]
    fn ties_and_unseen_cells_predict_nonmember() {
        // identical member/non-member distributions: every γ = 0
        let set = set_from(
            2,
            1,
            1,
            &[(0, 0, 1, 0), (0, 0, 1, 1), (0, 0, 0, 0), (0, 0, 0, 1)],
        );
        let rule = fit_regular_adversary(&estimate_tables(&set)).unwrap();
        assert_eq!(rule.decide(0, 0, 0), 0);
        assert_eq!(rule.decide(0, 1, 0), 0);
        // class 1 never observed
        let set = set_from(2, 2, 1, &[(0, 0, 1, 0), (0, 0, 0, 1)]);
        let rule = fit_regular_adversary(&estimate_tables(&set)).unwrap();
        assert_eq!(rule.decide(1, 0, 0), 0);
        assert_eq!(rule.decide(1, 1, 0), 0);
    }

    #[test]
    fn discriminating_rule_uses_per_group_gaps() {
        // group 0: members at bin 1, non-members at bin 0 (γ_0 = ±1)
        // group 1: identical distributions (γ_1 = 0)
        let set = set_from(
            2,
            1,
            2,
            &[
                (0, 0, 1, 1),
                (0, 0, 0, 0),
                (0, 1, 1, 0),
                (0, 1, 1, 1),
                (0, 1, 0, 0),
                (0, 1, 0, 1),
            ],
        );
        let rule = fit_discriminating_adversary(&estimate_tables(&set)).unwrap();
        assert_eq!(rule.decide(0, 1, 0), 1);
        assert_eq!(rule.decide(0, 0, 0), 0);
        assert_eq!(rule.decide(0, 0, 1), 0);
        assert_eq!(rule.decide(0, 1, 1), 0);
    }

    #[test]
    fn single_subgroup_rules_agree() {
        let set = eight_record_set();
        let table = estimate_tables(&set);
        let reg = fit_regular_adversary(&table).unwrap();
        let disc = fit_discriminating_adversary(&table).unwrap();
        for b in 0..2 {
            assert_eq!(reg.decide(0, b, 0), disc.decide(0, b, 0));
        }
        let (vr, vd, gap) = compare_adversaries(&table, &set).unwrap();
        assert_eq!(vr, vd);
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn hand_counted_accuracy() {
        let set = eight_record_set();
        let table = estimate_tables(&set);
        let report = evaluate_vulnerability(&fit_regular_adversary(&table).unwrap(), &set).unwrap();
        assert_eq!(report.vulnerability, 0.75); // 6 of 8
    }

    #[test]
    fn balanced_set_with_tied_rule_scores_half() {
        let set = set_from(
            2,
            1,
            1,
            &[(0, 0, 1, 0), (0, 0, 1, 1), (0, 0, 0, 0), (0, 0, 0, 1)],
        );
        let table = estimate_tables(&set);
        let report = evaluate_vulnerability(&fit_regular_adversary(&table).unwrap(), &set).unwrap();
        assert_eq!(report.vulnerability, 0.5);
    }

    #[test]
    fn disparity_from_two_groups() {
        // group 0 as the 8-record example (V = 0.75); group 1 indistinguishable (V = 0.5)
        let mut rows = vec![
            (0, 0, 1, 1),
            (0, 0, 1, 1),
            (0, 0, 1, 1),
            (0, 0, 1, 0),
            (0, 0, 0, 1),
            (0, 0, 0, 0),
            (0, 0, 0, 0),
            (0, 0, 0, 0),
        ];
        rows.extend([(0, 1, 1, 0), (0, 1, 1, 1), (0, 1, 0, 0), (0, 1, 0, 1)]);
        let set = set_from(2, 1, 2, &rows);
        let table = estimate_tables(&set);
        let report =
            evaluate_vulnerability(&fit_discriminating_adversary(&table).unwrap(), &set).unwrap();
        assert_eq!(report.by_subgroup[0], Some(0.75));
        assert_eq!(report.by_subgroup[1], Some(0.5));
        assert_eq!(report.disparity[0][1], Some(0.25));
        assert_eq!(report.disparity[1][0], Some(0.25));
        assert_eq!(report.disparity[0][0], Some(0.0));
        assert_eq!(report.max_disparity, Some(0.25));
    }

    #[test]
    fn absent_subgroup_is_undefined_and_excluded() {
        let set = set_from(
            2,
            1,
            3,
            &[(0, 0, 1, 1), (0, 0, 0, 0), (0, 2, 1, 1), (0, 2, 0, 0)],
        );
        let table = estimate_tables(&set);
        let report =
            evaluate_vulnerability(&fit_discriminating_adversary(&table).unwrap(), &set).unwrap();
        assert_eq!(report.by_subgroup[1], None);
        assert_eq!(report.disparity[0][1], None);
        assert_eq!(report.max_disparity, Some(0.0));
    }

    #[test]
    fn product_tables_make_the_rules_agree() {
        // when z is independent of the bin given (y, m), the subgroup
        // conditionals equal the pooled ones, so both rules coincide on
        // every observed cell and the adversaries tie exactly
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let set = crate::tablegen::geo_set(&mut rng, 2, 3, 4);
            let table = estimate_tables(&set);
            let reg = fit_regular_adversary(&table).unwrap();
            let disc = fit_discriminating_adversary(&table).unwrap();
            for y in 0..2 {
                for z in 0..3 {
                    if table.total_myz(0, y, z) == 0 {
                        continue;
                    }
                    for b in 0..4 {
                        assert_eq!(reg.decide(y, b, z), disc.decide(y, b, z));
                    }
                }
            }
            let (vr, vd, gap) = compare_adversaries(&table, &set).unwrap();
            assert_eq!(vr, vd);
            assert_eq!(gap, 0.0);
        }
    }

    #[test]
    fn held_out_evaluation_works_on_a_compatible_set() {
        let fit_set = eight_record_set();
        let rule = fit_regular_adversary(&estimate_tables(&fit_set)).unwrap();
        // same dims, different records: the rule transfers
        let held_out = set_from(2, 1, 1, &[(0, 0, 1, 1), (0, 0, 0, 0)]);
        let report = evaluate_vulnerability(&rule, &held_out).unwrap();
        assert_eq!(report.vulnerability, 1.0);
        // incompatible bin count is rejected
        let other_bins = set_from(4, 1, 1, &[(0, 0, 1, 3), (0, 0, 0, 0)]);
        assert!(evaluate_vulnerability(&rule, &other_bins).is_err());
    }

    #[test]
    fn compare_rejects_mismatched_table() {
        let set = eight_record_set();
        let other = set_from(2, 1, 1, &[(0, 0, 1, 0), (0, 0, 0, 1)]);
        let table = estimate_tables(&other);
        assert!(compare_adversaries(&table, &set).is_err());
    }
}
