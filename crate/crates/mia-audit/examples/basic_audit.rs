//! The core audit pipeline, step by step: train a model, build a balanced
//! evaluation set from its confidence outputs, fit both Bayes adversaries,
//! and measure overall and per-subgroup vulnerability.
//!
//! ```bash
//! cargo run --release --example basic_audit
//! ```

use mia_audit::adversary::audit_set;
use mia_audit::evalset::build_evaluation_set;
use mia_audit::experiments::{synth_generate, CellSpec, SubgroupSpec, SyntheticSpec};
use mia_audit::freq::estimate_tables;
use mia_audit::models::{feature_matrix, train_logreg, TrainConfig, TrainedModel};
use mia_audit::population::LabeledExample;
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    // a small two-subgroup population; subgroup 1 is rarer and harder
    let spec = SyntheticSpec {
        num_classes: 2,
        feature_dim: 2,
        subgroups: vec![
            SubgroupSpec {
                size: 900,
                class_weights: vec![0.5, 0.5],
                cells: vec![
                    CellSpec {
                        mean: vec![0.0, 0.0],
                        scale: 1.0,
                    },
                    CellSpec {
                        mean: vec![2.0, 0.0],
                        scale: 1.0,
                    },
                ],
            },
            SubgroupSpec {
                size: 90,
                class_weights: vec![0.5, 0.5],
                cells: vec![
                    CellSpec {
                        mean: vec![10.0, 0.0],
                        scale: 1.5,
                    },
                    CellSpec {
                        mean: vec![10.8, 0.0],
                        scale: 1.5,
                    },
                ],
            },
        ],
        seed: 42,
    };
    let pop = synth_generate(&spec)?;

    // stratified-ish split for the demo: alternate members and non-members
    let (members, nonmembers): (Vec<_>, Vec<_>) = pop
        .examples
        .iter()
        .cloned()
        .enumerate()
        .partition(|(i, _)| i % 2 == 0);
    let members: Vec<LabeledExample> = members.into_iter().map(|(_, e)| e).collect();
    let nonmembers: Vec<LabeledExample> = nonmembers.into_iter().map(|(_, e)| e).collect();

    let model = TrainedModel::Linear(train_logreg(
        &members,
        &TrainConfig {
            l2: 1e-4,
            epochs: 800,
            learning_rate: 0.5,
            ..TrainConfig::default()
        },
    )?);

    let pool = |examples: &[LabeledExample]| -> mia_audit::Result<Vec<(LabeledExample, Vec<f64>)>> {
        let x = feature_matrix(examples);
        let z: Vec<usize> = examples.iter().map(|e| e.z).collect();
        let conf = model.confidences(x.view(), &z)?;
        Ok(examples
            .iter()
            .zip(conf.outer_iter())
            .map(|(ex, row)| (ex.clone(), row.to_vec()))
            .collect())
    };

    let built = build_evaluation_set(&pool(&members)?, &pool(&nonmembers)?, 2, 2, 10, 7)?;
    println!(
        "evaluation set: {} records ({} cells dropped)",
        built.set.len(),
        built.dropped.len()
    );

    let table = estimate_tables(&built.set);
    let report = audit_set(&table, &built.set)?;
    for (name, adv) in [
        ("regular", &report.regular),
        ("discriminating", &report.discriminating),
    ] {
        println!(
            "{name:<15} vulnerability {:5.2} p.p.  per subgroup {:?}  max-disparity {:?}",
            pct(adv.vulnerability),
            adv.by_subgroup
                .iter()
                .map(|v| v.map(pct))
                .collect::<Vec<_>>(),
            adv.max_disparity.map(pct),
        );
    }
    Ok(())
}
