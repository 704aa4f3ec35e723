//! Equal representation is not equal vulnerability: all subgroups get the
//! same sample size K, but one subgroup's distribution is harder to learn,
//! so it stays more vulnerable at every K.
//!
//! ```bash
//! cargo run --release --example equal_representation_sweep
//! ```

use mia_audit::experiments::{
    equal_representation_sweep, CellSpec, ModelRecipe, StudyConfig, SubgroupSpec, SyntheticSpec,
};
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    let subgroup = |offset: f64, scale: f64| SubgroupSpec {
        size: 0, // overwritten by the sweep
        class_weights: vec![0.5, 0.5],
        cells: vec![
            CellSpec {
                mean: vec![offset, offset],
                scale,
            },
            CellSpec {
                mean: vec![offset + 1.2, offset],
                scale,
            },
        ],
    };
    // subgroup 1 has twice the intra-class spread: harder to learn
    let spec = SyntheticSpec {
        num_classes: 2,
        feature_dim: 2,
        subgroups: vec![subgroup(0.0, 1.0), subgroup(20.0, 2.0)],
        seed: 31,
    };
    let grid = [100, 200, 400, 800];
    let cfg = StudyConfig {
        n_shuffles: 5,
        base_seed: 13,
        ..StudyConfig::default()
    };
    let sweep = equal_representation_sweep(&spec, &grid, ModelRecipe::Mlp100, &cfg)?;
    println!("both subgroups at K examples each; subgroup 1 is harder (2x spread)\n");
    println!("{:>6}  {:>11}  {:>11}", "K", "V_d(easy)", "V_d(hard)");
    for p in &sweep.points {
        println!(
            "{:>6}  {:>10.2}  {:>10.2}",
            p.grid_value,
            pct(p.discriminating_by_subgroup[0].mean),
            pct(p.discriminating_by_subgroup[1].mean)
        );
    }
    Ok(())
}
