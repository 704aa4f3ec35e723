//! Cross-module identity verification.
//!
//! On an evaluation set built to satisfy the balance and stratification
//! invariants, the measured accuracy of each fitted Bayes adversary equals
//! its closed-form expression in the overfitting distances, exactly (up to
//! floating-point rounding). The same holds per subgroup and for the
//! pairwise disparity residuals. This module evaluates every such identity
//! on one (set, table) pair and reports the residuals; anything above the
//! tolerance indicates a broken invariant somewhere in the pipeline.

use serde::{Deserialize, Serialize};

use crate::adversary::{audit_set, VulnerabilityReport};
use crate::error::Result;
use crate::evalset::EvaluationSet;
use crate::freq::FrequencyTable;
use crate::overfit::{
    closed_form_subgroup_vulnerability, closed_form_vulnerability, compute_gaps, compute_profile,
    disparity_residuals,
};

/// Default tolerance: the identities are exact on empirical tables, so the
/// budget only covers floating-point rounding.
pub const IDENTITY_TOL: f64 = 1e-9;

/// One evaluated identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
}

impl IdentityCheck {
    pub fn pass(&self) -> bool {
        self.residual <= self.tol
    }
}

/// Residuals of every identity evaluated on one audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(IdentityCheck::pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&IdentityCheck> {
        self.checks.iter().filter(|c| !c.pass()).collect()
    }
}

/// Evaluates the full identity suite on a (table, set) pair, reusing an
/// existing measured report.
pub fn verify_identities_with_report(
    table: &FrequencyTable,
    set: &EvaluationSet,
    report: &VulnerabilityReport,
    tol: f64,
) -> IdentityReport {
    let profile = compute_profile(table);
    let gaps = compute_gaps(table);
    let mut checks = Vec::new();
    let mut push = |name: String, residual: f64| {
        checks.push(IdentityCheck {
            name,
            residual,
            tol,
        });
    };

    let (vr_cf, vd_cf) = closed_form_vulnerability(&profile);
    let vr = report.regular.vulnerability;
    let vd = report.discriminating.vulnerability;
    push("closed_form.overall.regular".into(), (vr - vr_cf).abs());
    push(
        "closed_form.overall.discriminating".into(),
        (vd - vd_cf).abs(),
    );

    // Bayes dominance of the discriminating adversary (in-sample).
    push(
        "dominance.discriminating_vs_regular".into(),
        (vr - vd).max(0.0),
    );

    let (reg_cf, disc_cf) = closed_form_subgroup_vulnerability(&profile, &gaps);
    let k = set.num_subgroups();
    for z in 0..k {
        match (report.regular.by_subgroup[z], reg_cf[z]) {
            (Some(m), Some(c)) => push(format!("closed_form.subgroup.regular.z{z}"), (m - c).abs()),
            (None, None) => {}
            (m, c) => push(
                format!("closed_form.subgroup.regular.z{z}"),
                if m.is_some() != c.is_some() {
                    f64::INFINITY
                } else {
                    0.0
                },
            ),
        }
        match (report.discriminating.by_subgroup[z], disc_cf[z]) {
            (Some(m), Some(c)) => push(
                format!("closed_form.subgroup.discriminating.z{z}"),
                (m - c).abs(),
            ),
            (None, None) => {}
            (m, c) => push(
                format!("closed_form.subgroup.discriminating.z{z}"),
                if m.is_some() != c.is_some() {
                    f64::INFINITY
                } else {
                    0.0
                },
            ),
        }
    }

    // Weighted subgroup averages recover the overall vulnerability.
    let mut agg_r = 0.0;
    let mut agg_d = 0.0;
    for z in 0..k {
        if let Some(v) = report.regular.by_subgroup[z] {
            agg_r += profile.pr_z[z] * v;
        }
        if let Some(v) = report.discriminating.by_subgroup[z] {
            agg_d += profile.pr_z[z] * v;
        }
    }
    push("aggregation.regular".into(), (agg_r - vr).abs());
    push("aggregation.discriminating".into(), (agg_d - vd).abs());

    for z1 in 0..k {
        for z2 in (z1 + 1)..k {
            let (Some(md_r), Some(md_d)) = (
                report.regular.disparity[z1][z2],
                report.discriminating.disparity[z1][z2],
            ) else {
                continue;
            };
            let (res_disc, res_reg) = disparity_residuals(&profile, &gaps, z1, z2)
                .expect("both subgroups verified present");
            push(
                format!("disparity_residual.discriminating.z{z1}z{z2}"),
                (res_disc.abs() / 2.0 - md_d).abs(),
            );
            push(
                format!("disparity_residual.regular.z{z1}z{z2}"),
                (res_reg.abs() / 2.0 - md_r).abs(),
            );
        }
    }

    // Gap-sum invariant: Σ_b γ = 0 on every populated cell.
    let mut worst = 0.0f64;
    for y in 0..set.num_classes() {
        if gaps.defined(y) {
            let s: f64 = (0..set.bins()).map(|b| gaps.gamma(y, b)).sum();
            worst = worst.max(s.abs());
        }
        for z in 0..k {
            if gaps.defined_sub(y, z) {
                let s: f64 = (0..set.bins()).map(|b| gaps.gamma_sub(y, z, b)).sum();
                worst = worst.max(s.abs());
            }
        }
    }
    push("gapsum.zero".into(), worst);

    IdentityReport { checks }
}

/// Fits, scores, and verifies in one call.
pub fn verify_identities(
    table: &FrequencyTable,
    set: &EvaluationSet,
    tol: f64,
) -> Result<IdentityReport> {
    let report = audit_set(table, set)?;
    Ok(verify_identities_with_report(table, set, &report, tol))
}

/// Checks the equality-of-odds implications and the zero-overfitting
/// baseline on constructed sets where they must hold exactly:
///
/// * product-form GEO sets: per-subgroup regular and discriminating
///   vulnerabilities coincide;
/// * GEO sets with equal class bias: both disparity matrices vanish;
/// * mirrored sets (no distributional overfitting): vulnerability is ½ and
///   disparity zero for both adversaries.
pub fn construction_checks(n_each: usize, seed: u64, tol: f64) -> Result<IdentityReport> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut geo_gap = 0.0f64;
    let mut no_bias_disparity = 0.0f64;
    let mut mirrored_residual = 0.0f64;
    for _ in 0..n_each {
        let p = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=4);
        let bins = rng.gen_range(2..=6);

        let set = crate::tablegen::geo_set(&mut rng, p, k, bins);
        let table = crate::freq::estimate_tables(&set);
        let report = audit_set(&table, &set)?;
        for z in 0..k {
            if let (Some(r), Some(d)) = (
                report.regular.by_subgroup[z],
                report.discriminating.by_subgroup[z],
            ) {
                geo_gap = geo_gap.max((r - d).abs());
            }
        }

        let set = crate::tablegen::geo_no_bias_set(&mut rng, p, k, bins);
        let table = crate::freq::estimate_tables(&set);
        crate::overfit::geo_no_bias_implication_check(&table)?;
        let report = audit_set(&table, &set)?;
        for adv in [&report.regular, &report.discriminating] {
            for row in &adv.disparity {
                for d in row.iter().flatten() {
                    no_bias_disparity = no_bias_disparity.max(*d);
                }
            }
        }

        let set = crate::tablegen::mirrored_set(&mut rng, p, k, bins);
        let table = crate::freq::estimate_tables(&set);
        let report = audit_set(&table, &set)?;
        for adv in [&report.regular, &report.discriminating] {
            mirrored_residual = mirrored_residual.max((adv.vulnerability - 0.5).abs());
            for row in &adv.disparity {
                for d in row.iter().flatten() {
                    mirrored_residual = mirrored_residual.max(*d);
                }
            }
        }
    }
    Ok(IdentityReport {
        checks: vec![
            IdentityCheck {
                name: "geo.adversaries_coincide".into(),
                residual: geo_gap,
                tol,
            },
            IdentityCheck {
                name: "geo_no_bias.zero_disparity".into(),
                residual: no_bias_disparity,
                tol,
            },
            IdentityCheck {
                name: "mirrored.exact_baseline".into(),
                residual: mirrored_residual,
                tol,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalset::AuditRecord;
    use crate::freq::estimate_tables;

    fn mixed_set() -> EvaluationSet {
        // two classes, two groups, irregular bins
        let rows = [
            (0, 0, 1, 3),
            (0, 0, 1, 3),
            (0, 0, 1, 1),
            (0, 0, 0, 0),
            (0, 0, 0, 1),
            (0, 0, 0, 3),
            (1, 0, 1, 2),
            (1, 0, 0, 2),
            (0, 1, 1, 4),
            (0, 1, 0, 0),
            (1, 1, 1, 1),
            (1, 1, 1, 4),
            (1, 1, 0, 4),
            (1, 1, 0, 4),
        ];
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, &(y, z, m, b))| AuditRecord {
                id: format!("r{i}"),
                y,
                z,
                m,
                bin: b,
            })
            .collect();
        EvaluationSet::from_records(records, 2, 2, 5, 0).unwrap()
    }

    #[test]
    fn identities_hold_on_a_mixed_set() {
        let set = mixed_set();
        let table = estimate_tables(&set);
        let report = verify_identities(&table, &set, IDENTITY_TOL).unwrap();
        assert!(report.all_pass(), "failures: {:?}", report.failures());
    }

    #[test]
    fn corrupted_table_fails_a_named_identity() {
        let set = mixed_set();
        let mut table = estimate_tables(&set);
        table.corrupt_joint_count_for_test(1, 0, 3, 40);
        let report = verify_identities(&table, &set, IDENTITY_TOL).unwrap();
        assert!(!report.all_pass());
        let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        assert!(
            names
                .iter()
                .any(|n| n.starts_with("closed_form") || n.starts_with("gapsum")),
            "unexpected failure set: {names:?}"
        );
    }
}
