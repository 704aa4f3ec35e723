//! Differential privacy as a mitigation: sweeping the privacy budget ε
//! trades accuracy against vulnerability and disparity.
//!
//! ```bash
//! cargo run --release --example dp_tradeoff
//! ```

use mia_audit::experiments::{
    run_shuffle_study, synth_generate, CellSpec, ModelRecipe, StudyConfig, SubgroupSpec,
    SyntheticSpec,
};
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    let spec = SyntheticSpec {
        num_classes: 2,
        feature_dim: 6,
        subgroups: (0..3)
            .map(|z| SubgroupSpec {
                size: [2000, 500, 40][z],
                class_weights: vec![0.5, 0.5],
                cells: (0..2)
                    .map(|y| CellSpec {
                        mean: {
                            let mut m = vec![0.0; 6];
                            m[0] = 6.0 * z as f64;
                            m[1] = 1.0 * y as f64;
                            m
                        },
                        scale: 1.0,
                    })
                    .collect(),
            })
            .collect(),
        seed: 23,
    };
    let pop = synth_generate(&spec)?;
    let cfg = StudyConfig {
        n_shuffles: 15,
        base_seed: 7,
        ..StudyConfig::default()
    };

    println!(
        "{:>8}  {:>8}  {:>8}  {:>12}",
        "epsilon", "test acc", "V_disc", "max-disp"
    );
    let baseline = run_shuffle_study(&pop, ModelRecipe::Logreg, &cfg)?;
    println!(
        "{:>8}  {:>8.2}  {:>8.2}  {:>12.2}",
        "none",
        pct(baseline.aggregate.test_accuracy.mean),
        pct(baseline.aggregate.discriminating.vulnerability.mean),
        pct(baseline.aggregate.discriminating.max_disparity.mean)
    );
    for epsilon in [1.0, 2.5, 5.0, 7.5] {
        let study = run_shuffle_study(&pop, ModelRecipe::DpLogreg { epsilon }, &cfg)?;
        let a = &study.aggregate;
        println!(
            "{:>8}  {:>8.2}  {:>8.2}  {:>12.2}",
            epsilon,
            pct(a.test_accuracy.mean),
            pct(a.discriminating.vulnerability.mean),
            pct(a.discriminating.max_disparity.mean)
        );
    }
    Ok(())
}
