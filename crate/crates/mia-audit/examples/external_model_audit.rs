//! Auditing an external model from its recorded confidence outputs: no
//! training in the loop, just the audit-input CSV format
//! `id,y,z,m,conf_0..conf_{p-1}`.
//!
//! ```bash
//! cargo run --release --example external_model_audit
//! ```

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mia_audit::evalset::read_confidence_csv;
use mia_audit::experiments::{audit_confidence_pools, StudyConfig};
use mia_audit::report::pct;

fn main() -> mia_audit::Result<()> {
    // pretend some external system produced these outputs: members get a
    // slightly sharper confidence on the true class than non-members
    let dir = std::env::temp_dir();
    let path = dir.join("external_confidences.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "id,y,z,m,conf_0,conf_1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..2000 {
        let y = rng.gen_range(0..2usize);
        let z = usize::from(rng.gen_range(0.0..1.0) < 0.15);
        let m = rng.gen_range(0..2u8);
        let sharpen = if m == 1 { 0.12 } else { 0.0 };
        let base: f64 = rng.gen_range(0.35..0.95);
        let true_conf = (base + sharpen).min(0.999);
        let (c0, c1) = if y == 0 {
            (true_conf, 1.0 - true_conf)
        } else {
            (1.0 - true_conf, true_conf)
        };
        writeln!(f, "ext{i},{y},{z},{m},{c0},{c1}")?;
    }
    f.flush()?;
    drop(f);

    let rows = read_confidence_csv(&path)?;
    let mut members = Vec::new();
    let mut nonmembers = Vec::new();
    for row in rows {
        match row.m {
            Some(1) => members.push((row.example, row.confidence)),
            _ => nonmembers.push((row.example, row.confidence)),
        }
    }
    let cfg = StudyConfig {
        n_shuffles: 5,
        base_seed: 1,
        ..StudyConfig::default()
    };
    let study = audit_confidence_pools(&members, &nonmembers, 2, 2, &cfg)?;
    let a = &study.aggregate;
    println!(
        "audited {} recorded outputs from {}",
        members.len() + nonmembers.len(),
        path.display()
    );
    println!(
        "regular vulnerability        {:5.2} ± {:4.2} p.p.",
        pct(a.regular.vulnerability.mean),
        pct(a.regular.vulnerability.std)
    );
    println!(
        "discriminating vulnerability {:5.2} ± {:4.2} p.p.",
        pct(a.discriminating.vulnerability.mean),
        pct(a.discriminating.vulnerability.std)
    );
    Ok(())
}
