//! Property tests for the invariants that tie the modules together.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mia_audit::adversary::audit_set;
use mia_audit::evalset::build_evaluation_set;
use mia_audit::freq::estimate_tables;
use mia_audit::identities::{verify_identities, IDENTITY_TOL};
use mia_audit::overfit::{compute_gaps, compute_profile};
use mia_audit::population::LabeledExample;
use mia_audit::tablegen::{mirrored_set, random_balanced_set};

fn arb_pool(prefix: &'static str) -> impl Strategy<Value = Vec<(LabeledExample, Vec<f64>)>> {
    prop::collection::vec((0usize..3, 0usize..3, 0.0f64..1.0), 1..60).prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (y, z, c))| {
                (
                    LabeledExample {
                        id: format!("{prefix}{i}"),
                        features: vec![],
                        y,
                        z,
                    },
                    vec![1.0 - c, c],
                )
            })
            .collect()
    })
}

proptest! {
    /// Built sets satisfy the balance and stratification invariants
    /// exactly, and identical inputs reproduce the same set.
    #[test]
    fn built_sets_are_balanced_and_deterministic(
        members in arb_pool("m"),
        nonmembers in arb_pool("n"),
        seed in 0u64..1000,
    ) {
        let out = build_evaluation_set(&members, &nonmembers, 3, 3, 10, seed);
        let Ok(out) = out else { return Ok(()); }; // no overlapping cells
        let set = &out.set;
        let table = estimate_tables(set);
        for y in 0..3 {
            for z in 0..3 {
                prop_assert_eq!(table.total_myz(1, y, z), table.total_myz(0, y, z));
            }
        }
        let again = build_evaluation_set(&members, &nonmembers, 3, 3, 10, seed).unwrap();
        prop_assert_eq!(set, &again.set);
    }

    /// The fine-grained counts always sum to the coarse table, and gap rows
    /// sum to zero on populated cells.
    #[test]
    fn table_summation_and_gap_sums(seed in 0u64..2000, p in 1usize..4, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_balanced_set(&mut rng, p, k, 10, 3);
        let table = estimate_tables(&set);
        for m in 0..2 {
            for y in 0..p {
                for b in 0..10 {
                    let fine: u64 = (0..k).map(|z| table.count_sub(m, y, z, b)).sum();
                    prop_assert_eq!(fine, table.count(m, y, b));
                }
            }
        }
        let gaps = compute_gaps(&table);
        for y in 0..p {
            if gaps.defined(y) {
                let s: f64 = (0..10).map(|b| gaps.gamma(y, b)).sum();
                prop_assert!(s.abs() < 1e-12);
            }
            for z in 0..k {
                if gaps.defined_sub(y, z) {
                    let s: f64 = (0..10).map(|b| gaps.gamma_sub(y, z, b)).sum();
                    prop_assert!(s.abs() < 1e-12);
                }
            }
        }
    }

    /// Measured adversary accuracy reconstructs from the closed forms, the
    /// discriminating adversary dominates, and subgroup averages aggregate
    /// to the overall value.
    #[test]
    fn closed_forms_reconstruct_measurements(seed in 0u64..2000, p in 1usize..4, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
        let set = random_balanced_set(&mut rng, p, k, 10, 3);
        let table = estimate_tables(&set);
        let report = verify_identities(&table, &set, IDENTITY_TOL).unwrap();
        prop_assert!(report.all_pass(), "failures: {:?}", report.failures());
    }

    /// Sets with identical member and non-member distributions per cell
    /// measure exactly the uninformed baseline.
    #[test]
    fn mirrored_sets_hit_the_baseline(seed in 0u64..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
        let set = mirrored_set(&mut rng, 2, 2, 6);
        let table = estimate_tables(&set);
        let profile = compute_profile(&table);
        prop_assert!(profile.tau.iter().all(|&t| t == 0.0));
        let report = audit_set(&table, &set).unwrap();
        prop_assert_eq!(report.regular.vulnerability, 0.5);
        prop_assert_eq!(report.discriminating.vulnerability, 0.5);
    }
}
