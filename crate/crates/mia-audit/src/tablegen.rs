//! Generators for structured evaluation sets.
//!
//! Used by the identity-verification command and by the test suites: random
//! balanced sets, product-form sets satisfying generalized equality of
//! odds (with or without class bias), and mirrored sets with identical
//! member/non-member distributions.
//!
//! Product-form constructions multiply a shared per-(y, m) bin histogram
//! by integer cell weights. Because IEEE division is correctly rounded and
//! the exact quotients agree, the resulting empirical conditionals are
//! bit-identical across subgroups, so the equalities they are meant to
//! exhibit hold exactly, not just within tolerance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::evalset::{AuditRecord, EvaluationSet};

fn push_cell(records: &mut Vec<AuditRecord>, y: usize, z: usize, m: u8, bin: usize, count: u64) {
    for _ in 0..count {
        let id = format!("g{}", records.len());
        records.push(AuditRecord { id, y, z, m, bin });
    }
}

/// Random histogram over `bins` summing to `total`.
fn random_histogram(rng: &mut ChaCha8Rng, bins: usize, total: u64) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for _ in 0..total {
        h[rng.gen_range(0..bins)] += 1;
    }
    h
}

/// A random evaluation set satisfying the balance and stratification
/// invariants: per (y, z) cell, an equal random number of members and
/// non-members with independent random bins.
pub fn random_balanced_set(
    rng: &mut ChaCha8Rng,
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
    max_cell: u64,
) -> EvaluationSet {
    loop {
        let mut records = Vec::new();
        for y in 0..num_classes {
            for z in 0..num_subgroups {
                let c = rng.gen_range(0..=max_cell);
                for m in 0..2u8 {
                    for _ in 0..c {
                        let bin = rng.gen_range(0..bins);
                        push_cell(&mut records, y, z, m, bin, 1);
                    }
                }
            }
        }
        if !records.is_empty() {
            return EvaluationSet::from_records(records, num_classes, num_subgroups, bins, 0)
                .expect("generated records satisfy the invariants");
        }
    }
}

/// Random dimensions with `p ≤ 4`, `k ≤ 4` and the given bin count.
pub fn random_dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.gen_range(1..=4), rng.gen_range(1..=4))
}

/// Random tiny dimensions with `p · bins · k ≤ cell_budget`.
pub fn random_tiny_dims(rng: &mut ChaCha8Rng, cell_budget: usize) -> (usize, usize, usize) {
    let mut combos = Vec::new();
    for p in 1..=4usize {
        for k in 1..=4usize {
            for bins in 2..=cell_budget {
                if p * k * bins <= cell_budget {
                    combos.push((p, k, bins));
                }
            }
        }
    }
    combos[rng.gen_range(0..combos.len())]
}

/// Shared per-(y, m) bin histograms with equal member/non-member totals.
fn shared_bases(
    rng: &mut ChaCha8Rng,
    num_classes: usize,
    bins: usize,
) -> (Vec<Vec<u64>>, Vec<Vec<u64>>, Vec<u64>) {
    let mut base_in = Vec::with_capacity(num_classes);
    let mut base_out = Vec::with_capacity(num_classes);
    let mut totals = Vec::with_capacity(num_classes);
    for _ in 0..num_classes {
        let t = rng.gen_range(2..=6u64);
        base_in.push(random_histogram(rng, bins, t));
        base_out.push(random_histogram(rng, bins, t));
        totals.push(t);
    }
    (base_in, base_out, totals)
}

/// A set satisfying generalized equality of odds exactly, with class bias
/// allowed: cell counts are `c[y][z] · base[m][y][b]`.
pub fn geo_set(
    rng: &mut ChaCha8Rng,
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
) -> EvaluationSet {
    let (base_in, base_out, _) = shared_bases(rng, num_classes, bins);
    let mut records = Vec::new();
    for y in 0..num_classes {
        for z in 0..num_subgroups {
            let c = rng.gen_range(1..=3u64);
            for b in 0..bins {
                push_cell(&mut records, y, z, 1, b, c * base_in[y][b]);
                push_cell(&mut records, y, z, 0, b, c * base_out[y][b]);
            }
        }
    }
    EvaluationSet::from_records(records, num_classes, num_subgroups, bins, 0)
        .expect("product construction satisfies the invariants")
}

/// A set satisfying generalized equality of odds *and* equal class bias
/// across subgroups: cell counts are `c[z] · base[m][y][b]`.
pub fn geo_no_bias_set(
    rng: &mut ChaCha8Rng,
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
) -> EvaluationSet {
    let (base_in, base_out, _) = shared_bases(rng, num_classes, bins);
    let weights: Vec<u64> = (0..num_subgroups).map(|_| rng.gen_range(1..=3)).collect();
    let mut records = Vec::new();
    for y in 0..num_classes {
        for (z, &c) in weights.iter().enumerate() {
            for b in 0..bins {
                push_cell(&mut records, y, z, 1, b, c * base_in[y][b]);
                push_cell(&mut records, y, z, 0, b, c * base_out[y][b]);
            }
        }
    }
    EvaluationSet::from_records(records, num_classes, num_subgroups, bins, 0)
        .expect("product construction satisfies the invariants")
}

/// A set whose member and non-member bin distributions coincide in every
/// (y, z) cell, so every overfitting distance is zero.
pub fn mirrored_set(
    rng: &mut ChaCha8Rng,
    num_classes: usize,
    num_subgroups: usize,
    bins: usize,
) -> EvaluationSet {
    let mut records = Vec::new();
    for y in 0..num_classes {
        for z in 0..num_subgroups {
            let total = rng.gen_range(1..=5);
            let h = random_histogram(rng, bins, total);
            for (b, &c) in h.iter().enumerate() {
                push_cell(&mut records, y, z, 1, b, c);
                push_cell(&mut records, y, z, 0, b, c);
            }
        }
    }
    EvaluationSet::from_records(records, num_classes, num_subgroups, bins, 0)
        .expect("mirrored construction satisfies the invariants")
}
