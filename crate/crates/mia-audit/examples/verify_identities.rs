//! Exact closed-form identities on empirical tables.
//!
//! Measured adversary accuracy equals a closed form in the
//! distributional-overfitting distances; per-subgroup accuracies and
//! pairwise disparities have closed forms too. On the balanced stratified
//! sets this toolkit builds, those identities hold to floating-point
//! precision, which this example demonstrates on random tables, and it
//! shows the equality-of-odds implications on constructed tables.
//!
//! ```bash
//! cargo run --release --example verify_identities
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mia_audit::freq::estimate_tables;
use mia_audit::identities::{construction_checks, verify_identities, IDENTITY_TOL};
use mia_audit::tablegen::{random_balanced_set, random_dims};

fn main() -> mia_audit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: Vec<(String, f64)> = Vec::new();
    for _ in 0..200 {
        let (p, k) = random_dims(&mut rng);
        let set = random_balanced_set(&mut rng, p, k, 10, 3);
        let table = estimate_tables(&set);
        let report = verify_identities(&table, &set, IDENTITY_TOL)?;
        for c in &report.checks {
            match worst.iter_mut().find(|(n, _)| *n == c.name) {
                Some((_, v)) => *v = v.max(c.residual),
                None => worst.push((c.name.clone(), c.residual)),
            }
        }
    }
    println!("worst residuals over 200 random tables:");
    for (name, residual) in &worst {
        println!("  {name:<40} {residual:.3e}");
    }

    let constructed = construction_checks(50, 7, 1e-12)?;
    println!("constructed-table checks (50 tables each):");
    for c in &constructed.checks {
        println!(
            "  {:<40} {:.3e}  {}",
            c.name,
            c.residual,
            if c.pass() { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
