//! How a subgroup's sample size drives its vulnerability: one target
//! subgroup grows while everything else stays fixed (other subgroups keep
//! bit-identical samples across grid points).
//!
//! ```bash
//! cargo run --release --example subgroup_size_sweep
//! ```

use mia_audit::experiments::{
    spearman, subgroup_size_sweep, CellSpec, ModelRecipe, StudyConfig, SubgroupSpec, SyntheticSpec,
};
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    let subgroup = |offset: f64, size: usize| SubgroupSpec {
        size,
        class_weights: vec![0.5, 0.5],
        cells: vec![
            CellSpec {
                mean: vec![offset, offset],
                scale: 1.0,
            },
            CellSpec {
                mean: vec![offset + 1.0, offset],
                scale: 1.0,
            },
        ],
    };
    let spec = SyntheticSpec {
        num_classes: 2,
        feature_dim: 2,
        subgroups: vec![subgroup(0.0, 64), subgroup(20.0, 800), subgroup(40.0, 800)],
        seed: 99,
    };
    let grid = [64, 128, 256, 512, 1024, 2048];
    let cfg = StudyConfig {
        n_shuffles: 5,
        base_seed: 11,
        ..StudyConfig::default()
    };
    let sweep = subgroup_size_sweep(&spec, 0, &grid, ModelRecipe::Mlp100, &cfg)?;

    println!("target subgroup 0 grows; subgroups 1 and 2 fixed at 800\n");
    println!(
        "{:>6}  {:>9}  {:>9}  {:>9}",
        "size", "V_d(z=0)", "V_d(z=1)", "V_d(z=2)"
    );
    for p in &sweep.points {
        println!(
            "{:>6}  {:>8.2}  {:>8.2}  {:>8.2}",
            p.grid_value,
            pct(p.discriminating_by_subgroup[0].mean),
            pct(p.discriminating_by_subgroup[1].mean),
            pct(p.discriminating_by_subgroup[2].mean)
        );
    }
    let sizes: Vec<f64> = grid.iter().map(|&g| g as f64).collect();
    let target: Vec<f64> = sweep
        .points
        .iter()
        .map(|p| p.discriminating_by_subgroup[0].mean)
        .collect();
    println!(
        "\nspearman(size, target vulnerability) = {:.2}",
        spearman(&sizes, &target)
    );
    Ok(())
}
