//! Export writers for audit artifacts.
//!
//! CSV files start with a `#`-prefixed metadata block; JSON files carry a
//! `meta` object. Outputs contain no timestamps, so a rerun with the same
//! flags and inputs is byte-identical.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adversary::AdversaryReport;
use crate::error::{AuditError, Result};
use crate::experiments::{
    Aggregate, PermutationTest, RecordOutcome, ShuffleStudy, StudyOutcomes, SweepResult,
};

/// Reproducibility block attached to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    /// Echo of the command and flags that produced the file.
    pub command: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: String, seed: u64) -> Self {
        Meta {
            tool: "mia-audit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed,
        }
    }

    fn comment_block(&self) -> String {
        format!(
            "# tool={} version={}\n# command={}\n# seed={}\n",
            self.tool, self.version, self.command, self.seed
        )
    }
}

/// Percentage points rounded to two decimals.
pub fn pct(x: f64) -> f64 {
    (x * 10_000.0).round() / 100.0
}

fn agg_json(a: &Aggregate, as_pct: bool) -> serde_json::Value {
    if a.n == 0 {
        return json!({ "mean": null, "std": null, "n": 0 });
    }
    if as_pct {
        json!({ "mean": a.mean, "std": a.std, "n": a.n,
                "mean_pct": pct(a.mean), "std_pct": pct(a.std) })
    } else {
        json!({ "mean": a.mean, "std": a.std, "n": a.n })
    }
}

fn adversary_report_json(r: &AdversaryReport) -> serde_json::Value {
    json!({
        "vulnerability": r.vulnerability,
        "vulnerability_pct": pct(r.vulnerability),
        "by_subgroup": r.by_subgroup,
        "by_subgroup_pct": r.by_subgroup.iter().map(|v| v.map(pct)).collect::<Vec<_>>(),
        "disparity": r.disparity,
        "max_disparity": r.max_disparity,
        "max_disparity_pct": r.max_disparity.map(pct),
    })
}

/// One CSV row per (shuffle, subgroup, adversary), plus overall rows.
pub fn write_study_csv(study: &ShuffleStudy, meta: &Meta, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(meta.comment_block().as_bytes())?;
    writeln!(w, "shuffle,adversary,subgroup,vulnerability")?;
    for r in &study.results {
        for (name, rep) in [
            ("regular", &r.report.regular),
            ("discriminating", &r.report.discriminating),
        ] {
            writeln!(w, "{},{},overall,{}", r.shuffle, name, rep.vulnerability)?;
            for (z, v) in rep.by_subgroup.iter().enumerate() {
                match v {
                    Some(v) => writeln!(w, "{},{},{z},{v}", r.shuffle, name)?,
                    None => writeln!(w, "{},{},{z},", r.shuffle, name)?,
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Aggregate means and standard deviations in JSON.
pub fn write_aggregate_json(study: &ShuffleStudy, meta: &Meta, path: &Path) -> Result<()> {
    let a = &study.aggregate;
    let adv = |x: &crate::experiments::AdversaryAggregate| {
        json!({
            "vulnerability": agg_json(&x.vulnerability, true),
            "max_disparity": agg_json(&x.max_disparity, true),
            "by_subgroup": x.by_subgroup.iter().map(|v| agg_json(v, true)).collect::<Vec<_>>(),
        })
    };
    let doc = json!({
        "meta": meta,
        "config": study.config,
        "num_classes": study.num_classes,
        "num_subgroups": study.num_subgroups,
        "n_shuffles": study.results.len(),
        "test_accuracy": agg_json(&a.test_accuracy, true),
        "train_accuracy": agg_json(&a.train_accuracy, true),
        "overfitting": agg_json(&a.overfitting, true),
        "regular": adv(&a.regular),
        "discriminating": adv(&a.discriminating),
        "identities_pass": study.identities_pass(),
    });
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &doc)?;
    Ok(())
}

/// Per-shuffle vulnerability reports with cell counts and metadata.
pub fn write_reports_json(study: &ShuffleStudy, meta: &Meta, path: &Path) -> Result<()> {
    let shuffles: Vec<serde_json::Value> = study
        .results
        .iter()
        .map(|r| {
            json!({
                "shuffle": r.shuffle,
                "seed": r.seed,
                "bins": study.config.bins,
                "num_classes": study.num_classes,
                "num_subgroups": study.num_subgroups,
                "eval_size": r.eval_size,
                "cell_counts": r.cell_counts,
                "dropped_cells": r.dropped_cells,
                "test_accuracy": r.test_accuracy,
                "train_accuracy": r.train_accuracy,
                "regular": adversary_report_json(&r.report.regular),
                "discriminating": adversary_report_json(&r.report.discriminating),
            })
        })
        .collect();
    let doc = json!({ "meta": meta, "shuffles": shuffles });
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &doc)?;
    Ok(())
}

/// Per-shuffle overfitting profiles (γ, τ, τ_z, ρ_z tensors) and identity
/// residuals.
pub fn write_profiles_json(study: &ShuffleStudy, meta: &Meta, path: &Path) -> Result<()> {
    let shuffles: Vec<serde_json::Value> = study
        .results
        .iter()
        .map(|r| {
            json!({
                "shuffle": r.shuffle,
                "seed": r.seed,
                "profile": r.profile,
                "gaps": r.gaps_export,
                "identity_checks": r.identity.checks,
            })
        })
        .collect();
    let doc = json!({ "meta": meta, "shuffles": shuffles });
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &doc)?;
    Ok(())
}

/// Flat CSV of subgroup gaps: `shuffle,y,z,b,gamma_z`.
pub fn write_gaps_csv(study: &ShuffleStudy, meta: &Meta, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(meta.comment_block().as_bytes())?;
    writeln!(w, "shuffle,y,z,b,gamma_z")?;
    for r in &study.results {
        let g = &r.gaps_export;
        for y in 0..g.num_classes {
            for z in 0..g.num_subgroups {
                for b in 0..g.bins {
                    writeln!(w, "{},{y},{z},{b},{}", r.shuffle, g.gamma_sub(y, z, b))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-record adversary outcomes, the input to the significance command.
pub fn write_outcomes_csv(study: &ShuffleStudy, meta: &Meta, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(meta.comment_block().as_bytes())?;
    writeln!(w, "shuffle,z,correct_regular,correct_discriminating")?;
    for r in &study.results {
        for o in &r.outcomes {
            writeln!(
                w,
                "{},{},{},{}",
                r.shuffle, o.z, o.correct_regular as u8, o.correct_discriminating as u8
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads outcomes back for significance testing.
pub fn read_outcomes_csv(path: &Path, num_subgroups: usize) -> Result<StudyOutcomes> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut shuffles: Vec<Vec<RecordOutcome>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let fail = |message: String| AuditError::Parse {
            path: path.display().to_string(),
            line: i + 2,
            message,
        };
        let shuffle: usize = rec[0]
            .parse()
            .map_err(|_| fail("bad shuffle index".into()))?;
        let z: u32 = rec[1].parse().map_err(|_| fail("bad subgroup".into()))?;
        let cr = &rec[2] == "1";
        let cd = &rec[3] == "1";
        while shuffles.len() <= shuffle {
            shuffles.push(Vec::new());
        }
        shuffles[shuffle].push(RecordOutcome {
            z,
            correct_regular: cr,
            correct_discriminating: cd,
        });
    }
    if shuffles.is_empty() {
        return Err(AuditError::unusable(format!(
            "{}: no outcome rows",
            path.display()
        )));
    }
    Ok(StudyOutcomes {
        num_subgroups,
        shuffles,
    })
}

/// Sweep export: the grid variable column plus per-subgroup curves.
pub fn write_sweep_csv(sweep: &SweepResult, meta: &Meta, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(meta.comment_block().as_bytes())?;
    writeln!(
        w,
        "grid_value,adversary,subgroup,vulnerability_mean,vulnerability_std,n"
    )?;
    for p in &sweep.points {
        for (name, curve, overall) in [
            ("regular", &p.regular_by_subgroup, &p.regular_overall),
            (
                "discriminating",
                &p.discriminating_by_subgroup,
                &p.discriminating_overall,
            ),
        ] {
            writeln!(
                w,
                "{},{},overall,{},{},{}",
                p.grid_value, name, overall.mean, overall.std, overall.n
            )?;
            for (z, a) in curve.iter().enumerate() {
                if a.n == 0 {
                    writeln!(w, "{},{},{z},,,0", p.grid_value, name)?;
                } else {
                    writeln!(
                        w,
                        "{},{},{z},{},{},{}",
                        p.grid_value, name, a.mean, a.std, a.n
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::synth::{symmetric_spec, synth_generate};
    use crate::experiments::{run_shuffle_study, ModelRecipe, StudyConfig, StudyOutcomes};

    #[test]
    fn percentage_rendering_uses_two_decimals() {
        assert_eq!(pct(0.50551), 50.55);
        assert_eq!(pct(0.1), 10.0);
        assert_eq!(pct(0.123456), 12.35);
    }

    #[test]
    fn outcomes_round_trip_through_csv() {
        let pop = synth_generate(&symmetric_spec(2, 2, 120, 2.0, 1.0, 3)).unwrap();
        let cfg = StudyConfig {
            n_shuffles: 2,
            base_seed: 1,
            ..StudyConfig::default()
        };
        let study = run_shuffle_study(&pop, ModelRecipe::Logreg, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("outcomes.csv");
        let meta = Meta::new("test".into(), 1);
        write_outcomes_csv(&study, &meta, &path).unwrap();
        let back = read_outcomes_csv(&path, study.num_subgroups).unwrap();
        assert_eq!(back, StudyOutcomes::from(&study));
    }
}

/// Significance output: one entry per tested statistic with the Bonferroni
/// decision at the configured level.
pub fn write_significance_json(
    tests: &[(PermutationTest, f64, bool)],
    alpha: f64,
    meta: &Meta,
    path: &Path,
) -> Result<()> {
    let entries: Vec<serde_json::Value> = tests
        .iter()
        .map(|(t, alpha_adjusted, reject)| {
            json!({
                "adversary": t.adversary,
                "statistic": t.statistic,
                "observed": t.observed,
                "observed_pct": pct(t.observed),
                "p_value": t.p_value,
                "n_permutations": t.n_permutations,
                "alpha_adjusted": alpha_adjusted,
                "reject": reject,
            })
        })
        .collect();
    let doc = json!({ "meta": meta, "alpha": alpha, "tests": entries });
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &doc)?;
    Ok(())
}
