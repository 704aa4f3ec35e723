//! Full audit of a real tabular dataset (census income or COMPAS).
//!
//! The raw files are not bundled; fetch them first:
//!
//! ```bash
//! scripts/fetch_data.sh            # downloads into ./data
//! cargo run --release --example dataset_audit -- data compas
//! cargo run --release --example dataset_audit -- data adult
//! ```

use std::path::PathBuf;

use mia_audit::experiments::{run_shuffle_study, ModelRecipe, StudyConfig};
use mia_audit::ingest::{load_adult, load_compas};
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    let mut args = std::env::args().skip(1);
    let data_dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let dataset = args.next().unwrap_or_else(|| "compas".into());

    let (pop, manifest) = match dataset.as_str() {
        "adult" => load_adult(&data_dir)?,
        "compas" => load_compas(&data_dir.join("compas-scores-two-years.csv"))?,
        other => {
            eprintln!("unknown dataset {other:?}; expected adult or compas");
            std::process::exit(2);
        }
    };
    println!(
        "{}: {} examples, {} features, subgroups {:?}",
        manifest.name, manifest.examples, manifest.feature_count, manifest.subgroup_names
    );

    let cfg = StudyConfig {
        n_shuffles: 35,
        base_seed: 7,
        ..StudyConfig::default()
    };
    let study = run_shuffle_study(&pop, ModelRecipe::Logreg, &cfg)?;
    let a = &study.aggregate;
    println!(
        "logreg over 35 shuffles: test accuracy {:5.2} ± {:4.2} p.p.",
        pct(a.test_accuracy.mean),
        pct(a.test_accuracy.std)
    );
    for (name, adv) in [
        ("regular", &a.regular),
        ("discriminating", &a.discriminating),
    ] {
        println!(
            "  {name:<15} vulnerability {:5.2} ± {:5.2} p.p.   max-disparity {:5.2} ± {:5.2} p.p.",
            pct(adv.vulnerability.mean),
            pct(adv.vulnerability.std),
            pct(adv.max_disparity.mean),
            pct(adv.max_disparity.std)
        );
        for (z, agg) in adv.by_subgroup.iter().enumerate() {
            println!(
                "      {:<4} {:5.2} ± {:5.2} p.p.",
                manifest.subgroup_names[z],
                pct(agg.mean),
                pct(agg.std)
            );
        }
    }
    Ok(())
}
