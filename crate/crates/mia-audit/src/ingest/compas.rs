//! COMPAS two-year recidivism ingestion (ProPublica export).
//!
//! Follows the published pre-processing: drop rows whose screening date is
//! more than 30 days from the arrest, rows with missing recidivism status
//! (`is_recid = -1`), ordinary-traffic charge degrees (`O`), and rows
//! without a COMPAS score (`score_text = N/A`). The COMPAS risk scores
//! themselves are not used as features.
//!
//! Features (15): age, priors_count, juv_fel_count, juv_misd_count,
//! juv_other_count, plus one-hot sex, charge degree, and the six raw race
//! categories. The subgroup attribute merges Asian into Other, giving the
//! five subgroups AA, CA, HI, NA, OT; race stays in the feature set.

use std::path::Path;

use super::{CategoryEncoder, DatasetManifest};
use crate::error::{AuditError, Result};
use crate::population::{LabeledExample, Population};

const RACE: [&str; 6] = [
    "African-American",
    "Caucasian",
    "Hispanic",
    "Native American",
    "Asian",
    "Other",
];

const SEX: [&str; 2] = ["Male", "Female"];
const CHARGE_DEGREE: [&str; 2] = ["F", "M"];

pub(crate) const SUBGROUP_NAMES: [&str; 5] = ["AA", "CA", "HI", "NA", "OT"];

fn subgroup_of(race: &str) -> usize {
    match race {
        "African-American" => 0,
        "Caucasian" => 1,
        "Hispanic" => 2,
        "Native American" => 3,
        // Asian is folded into Other to match the published subgroup list
        _ => 4,
    }
}

const NUMERIC_COLUMNS: [&str; 5] = [
    "age",
    "priors_count",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
];

/// Loads the ProPublica `compas-scores-two-years.csv` export.
pub fn load_compas(path: &Path) -> Result<(Population, DatasetManifest)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            AuditError::validation(format!(
                "{}: missing required column {name:?}",
                path.display()
            ))
        })
    };
    let idx_days = col("days_b_screening_arrest")?;
    let idx_is_recid = col("is_recid")?;
    let idx_degree = col("c_charge_degree")?;
    let idx_score_text = col("score_text")?;
    let idx_label = col("two_year_recid")?;
    let idx_sex = col("sex")?;
    let idx_race = col("race")?;
    let idx_numeric: Vec<usize> = NUMERIC_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let encoders = [
        CategoryEncoder::new("sex", &SEX),
        CategoryEncoder::new("c_charge_degree", &CHARGE_DEGREE),
        CategoryEncoder::new("race", &RACE),
    ];

    let mut examples = Vec::new();
    let mut dropped = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let days: Option<f64> = rec[idx_days].parse().ok();
        let keep = match days {
            Some(d) => (-30.0..=30.0).contains(&d),
            None => false,
        };
        let is_recid = rec[idx_is_recid].parse::<i64>().unwrap_or(-1);
        let degree = &rec[idx_degree];
        let score_text = &rec[idx_score_text];
        if !keep
            || is_recid == -1
            || degree.is_empty()
            || degree == "O"
            || score_text.is_empty()
            || score_text == "N/A"
        {
            dropped += 1;
            continue;
        }
        let mut features = Vec::with_capacity(15);
        let mut parse_failed = false;
        for &ci in &idx_numeric {
            match rec[ci].parse::<f64>() {
                Ok(v) => features.push(v),
                Err(_) => {
                    parse_failed = true;
                    break;
                }
            }
        }
        if parse_failed {
            dropped += 1;
            continue;
        }
        for (enc, ci) in encoders.iter().zip([idx_sex, idx_degree, idx_race]) {
            enc.encode(&rec[ci], &mut features, row)?;
        }
        let y = match &rec[idx_label] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(AuditError::Parse {
                    path: path.display().to_string(),
                    line: row,
                    message: format!("unknown two_year_recid value {other:?}"),
                })
            }
        };
        examples.push(LabeledExample {
            id: format!("compas:{row}"),
            features,
            y,
            z: subgroup_of(&rec[idx_race]),
        });
    }

    let feature_names: Vec<String> = NUMERIC_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(encoders.iter().flat_map(|e| e.names().collect::<Vec<_>>()))
        .collect();
    let manifest = DatasetManifest {
        name: "compas".into(),
        examples: examples.len(),
        feature_count: feature_names.len(),
        label_column: "two_year_recid".into(),
        subgroup_column: "race".into(),
        subgroup_names: SUBGROUP_NAMES.iter().map(|s| s.to_string()).collect(),
        class_names: vec!["no-recid".into(), "recid".into()],
        feature_names,
        dropped_rows: dropped,
    };
    manifest.validate()?;
    let pop = Population::new(examples, 2, SUBGROUP_NAMES.len())?;
    Ok((pop, manifest))
}
