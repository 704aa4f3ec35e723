//! Census-income (ADULT) ingestion.
//!
//! Accepts the published `adult.data` / `adult.test` files (or a directory
//! containing both, or a single concatenation). Encoding:
//!
//! * numeric: age, education-num, capital-gain, capital-loss,
//!   hours-per-week;
//! * one-hot: workclass, marital-status, occupation, relationship, race,
//!   sex, native-country, with `?` kept as its own category so no row is
//!   dropped for a missing categorical;
//! * dropped columns: `fnlwgt` (a census sampling weight, not an attribute
//!   of the person) and `education` (a relabeling of `education-num`).
//!
//! This yields 91 features over all 48,842 examples. The sensitive
//! attribute (race) stays in the feature set and also defines the
//! subgroups WH, BL, AI, AE, OT.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use super::{CategoryEncoder, DatasetManifest};
use crate::error::{AuditError, Result};
use crate::population::{LabeledExample, Population};

pub(crate) const SUBGROUPS: [(&str, &str); 5] = [
    ("White", "WH"),
    ("Black", "BL"),
    ("Asian-Pac-Islander", "AI"),
    ("Amer-Indian-Eskimo", "AE"),
    ("Other", "OT"),
];

const WORKCLASS: [&str; 9] = [
    "Private",
    "Self-emp-not-inc",
    "Self-emp-inc",
    "Federal-gov",
    "Local-gov",
    "State-gov",
    "Without-pay",
    "Never-worked",
    "?",
];

const MARITAL: [&str; 7] = [
    "Married-civ-spouse",
    "Divorced",
    "Never-married",
    "Separated",
    "Widowed",
    "Married-spouse-absent",
    "Married-AF-spouse",
];

const OCCUPATION: [&str; 15] = [
    "Tech-support",
    "Craft-repair",
    "Other-service",
    "Sales",
    "Exec-managerial",
    "Prof-specialty",
    "Handlers-cleaners",
    "Machine-op-inspct",
    "Adm-clerical",
    "Farming-fishing",
    "Transport-moving",
    "Priv-house-serv",
    "Protective-serv",
    "Armed-Forces",
    "?",
];

const RELATIONSHIP: [&str; 6] = [
    "Wife",
    "Own-child",
    "Husband",
    "Not-in-family",
    "Other-relative",
    "Unmarried",
];

const RACE: [&str; 5] = [
    "White",
    "Black",
    "Asian-Pac-Islander",
    "Amer-Indian-Eskimo",
    "Other",
];

const SEX: [&str; 2] = ["Female", "Male"];

const COUNTRY: [&str; 42] = [
    "United-States",
    "Cambodia",
    "England",
    "Puerto-Rico",
    "Canada",
    "Germany",
    "Outlying-US(Guam-USVI-etc)",
    "India",
    "Japan",
    "Greece",
    "South",
    "China",
    "Cuba",
    "Iran",
    "Honduras",
    "Philippines",
    "Italy",
    "Poland",
    "Jamaica",
    "Vietnam",
    "Mexico",
    "Portugal",
    "Ireland",
    "France",
    "Dominican-Republic",
    "Laos",
    "Ecuador",
    "Taiwan",
    "Haiti",
    "Columbia",
    "Hungary",
    "Guatemala",
    "Nicaragua",
    "Scotland",
    "Thailand",
    "Yugoslavia",
    "El-Salvador",
    "Trinadad&Tobago",
    "Peru",
    "Hong",
    "Holand-Netherlands",
    "?",
];

const NUMERIC_NAMES: [&str; 5] = [
    "age",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
];

fn encoders() -> Vec<CategoryEncoder> {
    vec![
        CategoryEncoder::new("workclass", &WORKCLASS),
        CategoryEncoder::new("marital-status", &MARITAL),
        CategoryEncoder::new("occupation", &OCCUPATION),
        CategoryEncoder::new("relationship", &RELATIONSHIP),
        CategoryEncoder::new("race", &RACE),
        CategoryEncoder::new("sex", &SEX),
        CategoryEncoder::new("native-country", &COUNTRY),
    ]
}

fn source_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let files: Vec<PathBuf> = ["adult.data", "adult.test"]
            .iter()
            .map(|f| path.join(f))
            .filter(|p| p.exists())
            .collect();
        if files.is_empty() {
            return Err(AuditError::validation(format!(
                "{}: expected adult.data and/or adult.test in the directory",
                path.display()
            )));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Loads the census-income dataset into a population.
pub fn load_adult(path: &Path) -> Result<(Population, DatasetManifest)> {
    let encoders = encoders();
    let mut examples = Vec::new();
    let mut dropped = 0usize;
    let mut bad_rows: Vec<usize> = Vec::new();
    for file in source_files(path)? {
        let reader = std::io::BufReader::new(std::fs::File::open(&file)?);
        for (line_idx, line) in reader.lines().enumerate() {
            let line = line?;
            let row = line_idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('|') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 15 {
                bad_rows.push(row);
                continue;
            }
            // raw layout: age workclass fnlwgt education education-num
            // marital occupation relationship race sex capital-gain
            // capital-loss hours-per-week native-country income
            let numerics: Option<Vec<f64>> = [0usize, 4, 10, 11, 12]
                .iter()
                .map(|&i| fields[i].parse::<f64>().ok())
                .collect();
            let Some(numerics) = numerics else {
                dropped += 1;
                continue;
            };
            let mut features = numerics;
            for (enc, &col) in encoders.iter().zip(&[1usize, 5, 6, 7, 8, 9, 13]) {
                enc.encode(fields[col], &mut features, row)?;
            }
            let label_raw = fields[14].trim_end_matches('.');
            let y = match label_raw {
                ">50K" => 1,
                "<=50K" => 0,
                other => {
                    return Err(AuditError::Parse {
                        path: file.display().to_string(),
                        line: row,
                        message: format!("unknown income label {other:?}"),
                    })
                }
            };
            let z = SUBGROUPS
                .iter()
                .position(|(raw, _)| *raw == fields[8])
                .expect("race encoder already validated the value");
            examples.push(LabeledExample {
                id: format!(
                    "adult:{}:{row}",
                    file.file_name().unwrap().to_string_lossy()
                ),
                features,
                y,
                z,
            });
        }
    }
    if !bad_rows.is_empty() {
        return Err(AuditError::validation(format!(
            "{}: {} rows with a wrong field count (first at rows {:?})",
            path.display(),
            bad_rows.len(),
            &bad_rows[..bad_rows.len().min(5)]
        )));
    }
    let feature_names: Vec<String> = NUMERIC_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(encoders.iter().flat_map(|e| e.names().collect::<Vec<_>>()))
        .collect();
    let manifest = DatasetManifest {
        name: "adult".into(),
        examples: examples.len(),
        feature_count: feature_names.len(),
        label_column: "income".into(),
        subgroup_column: "race".into(),
        subgroup_names: SUBGROUPS.iter().map(|(_, s)| s.to_string()).collect(),
        class_names: vec!["<=50K".into(), ">50K".into()],
        feature_names,
        dropped_rows: dropped,
    };
    manifest.validate()?;
    let pop = Population::new(examples, 2, SUBGROUPS.len())?;
    Ok((pop, manifest))
}
