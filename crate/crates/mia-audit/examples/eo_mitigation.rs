//! Equalized-odds post-processing as a mitigation: the per-group
//! randomized policy narrows the gap between the discriminating and
//! regular adversaries, at some cost in accuracy.
//!
//! ```bash
//! cargo run --release --example eo_mitigation
//! ```

use mia_audit::experiments::{
    run_shuffle_study, synth_generate, CellSpec, ModelRecipe, StudyConfig, SubgroupSpec,
    SyntheticSpec,
};
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    // two subgroups with different base rates and separability, so the raw
    // classifier violates equality of odds
    let spec = SyntheticSpec {
        num_classes: 2,
        feature_dim: 4,
        subgroups: vec![
            SubgroupSpec {
                size: 1600,
                class_weights: vec![0.7, 0.3],
                cells: vec![
                    CellSpec {
                        mean: vec![0.0, 0.0, 0.0, 0.0],
                        scale: 1.0,
                    },
                    CellSpec {
                        mean: vec![1.4, 0.0, 0.0, 0.0],
                        scale: 1.0,
                    },
                ],
            },
            SubgroupSpec {
                size: 160,
                class_weights: vec![0.4, 0.6],
                cells: vec![
                    CellSpec {
                        mean: vec![12.0, 0.0, 0.0, 0.0],
                        scale: 1.6,
                    },
                    CellSpec {
                        mean: vec![12.7, 0.0, 0.0, 0.0],
                        scale: 1.6,
                    },
                ],
            },
        ],
        seed: 47,
    };
    let pop = synth_generate(&spec)?;
    let cfg = StudyConfig {
        n_shuffles: 15,
        base_seed: 3,
        ..StudyConfig::default()
    };
    println!(
        "{:>10}  {:>8}  {:>8}  {:>8}  {:>12}",
        "model", "test acc", "V_reg", "V_disc", "max-disp(d)"
    );
    for (name, recipe) in [
        ("mlp100", ModelRecipe::Mlp100),
        ("logreg", ModelRecipe::Logreg),
        ("eo-logreg", ModelRecipe::EoLogreg),
    ] {
        let study = run_shuffle_study(&pop, recipe, &cfg)?;
        let a = &study.aggregate;
        println!(
            "{:>10}  {:>8.2}  {:>8.2}  {:>8.2}  {:>12.2}",
            name,
            pct(a.test_accuracy.mean),
            pct(a.regular.vulnerability.mean),
            pct(a.discriminating.vulnerability.mean),
            pct(a.discriminating.max_disparity.mean)
        );
    }
    Ok(())
}
