//! End-to-end pipeline runs on full-scale synthetic raw files in the
//! published dataset formats. These guard the ingest encodings and the
//! dataset-facing study code at realistic sizes and subgroup skews (down
//! to an 11-member subgroup), independently of the real data files.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mia_audit::experiments::{run_shuffle_study, ModelRecipe, StudyConfig};
use mia_audit::ingest::{load_adult, load_compas};

const WORKCLASS: [&str; 8] = [
    "Private",
    "Self-emp-not-inc",
    "Self-emp-inc",
    "Federal-gov",
    "Local-gov",
    "State-gov",
    "Without-pay",
    "?",
];
const EDUCATION: [&str; 4] = ["Bachelors", "HS-grad", "11th", "Masters"];
const MARITAL: [&str; 3] = ["Never-married", "Married-civ-spouse", "Divorced"];
const OCCUPATION: [&str; 6] = [
    "Adm-clerical",
    "Exec-managerial",
    "Craft-repair",
    "Sales",
    "Other-service",
    "?",
];
const RELATIONSHIP: [&str; 4] = ["Not-in-family", "Husband", "Wife", "Own-child"];
const COUNTRY: [&str; 5] = ["United-States", "Mexico", "Philippines", "Germany", "?"];

/// Census-format row with income tied to education and hours, so a linear
/// model has signal to find.
fn adult_row(rng: &mut ChaCha8Rng, race: &str, test_file: bool) -> String {
    let age = rng.gen_range(17..90);
    let education_idx = rng.gen_range(0..EDUCATION.len());
    let education_num = [13, 9, 7, 14][education_idx];
    let hours = rng.gen_range(10..80);
    let gain = if rng.gen_range(0.0..1.0) < 0.08 {
        rng.gen_range(1000..20000)
    } else {
        0
    };
    let score = education_num as f64 / 14.0 + hours as f64 / 80.0 + gain as f64 / 20000.0
        + rng.gen_range(-0.55..0.55);
    let label = if score > 1.25 { ">50K" } else { "<=50K" };
    let dot = if test_file { "." } else { "" };
    format!(
        "{age}, {}, {}, {}, {education_num}, {}, {}, {}, {race}, {}, {gain}, 0, {hours}, {}, {label}{dot}",
        WORKCLASS[rng.gen_range(0..WORKCLASS.len())],
        rng.gen_range(10000..990000),
        EDUCATION[education_idx],
        MARITAL[rng.gen_range(0..MARITAL.len())],
        OCCUPATION[rng.gen_range(0..OCCUPATION.len())],
        RELATIONSHIP[rng.gen_range(0..RELATIONSHIP.len())],
        if rng.gen_range(0.0..1.0) < 0.33 { "Female" } else { "Male" },
        COUNTRY[rng.gen_range(0..COUNTRY.len())],
    )
}

fn write_adult_fixture(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    // race marginals shaped like the census data
    let races: [(&str, usize); 5] = [
        ("White", 41_762),
        ("Black", 4_685),
        ("Asian-Pac-Islander", 1_519),
        ("Amer-Indian-Eskimo", 470),
        ("Other", 406),
    ];
    let mut rows: Vec<(usize, String)> = Vec::with_capacity(48_842);
    for (race, count) in races {
        for _ in 0..count {
            let key = rng.gen_range(0..usize::MAX);
            rows.push((key, race.to_string()));
        }
    }
    rows.sort(); // interleave the races deterministically
    let split = 32_561; // data/test file sizes of the published export
    let mut data = std::io::BufWriter::new(std::fs::File::create(dir.join("adult.data")).unwrap());
    let mut test = std::io::BufWriter::new(std::fs::File::create(dir.join("adult.test")).unwrap());
    writeln!(test, "|1x3 Cross validator").unwrap();
    for (i, (_, race)) in rows.iter().enumerate() {
        if i < split {
            writeln!(data, "{}", adult_row(&mut rng, race, false)).unwrap();
        } else {
            writeln!(test, "{}", adult_row(&mut rng, race, true)).unwrap();
        }
    }
    writeln!(data).unwrap(); // published files end with a blank line
}

#[test]
fn adult_scale_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    write_adult_fixture(dir.path());
    let (pop, manifest) = load_adult(dir.path()).unwrap();
    assert_eq!(manifest.examples, 48_842);
    assert_eq!(manifest.feature_count, 91);
    assert_eq!(manifest.dropped_rows, 0);
    let counts = pop.cell_counts();
    assert!(counts.iter().filter(|&&c| c > 0).count() >= 9, "all race cells populated");

    let cfg = StudyConfig {
        n_shuffles: 3,
        base_seed: 7,
        ..StudyConfig::default()
    };
    let study = run_shuffle_study(&pop, ModelRecipe::Logreg, &cfg).unwrap();
    assert!(study.identities_pass());
    let acc = study.aggregate.test_accuracy.mean;
    assert!(acc > 0.6, "proxy census model should beat chance, got {acc}");
    let v = study.aggregate.regular.vulnerability.mean;
    assert!((0.45..0.75).contains(&v), "regular vulnerability {v}");

    // the over-parametrized recipe runs at this scale and overfits
    let big = run_shuffle_study(&pop, ModelRecipe::Mlp500, &cfg).unwrap();
    assert!(big.identities_pass());
    assert!(
        big.aggregate.overfitting.mean > 0.0,
        "expected a positive overfitting gap, got {}",
        big.aggregate.overfitting.mean
    );
}

const COMPAS_HEADER: &str = "id,name,first,last,sex,dob,age,age_cat,race,juv_fel_count,decile_score,juv_misd_count,juv_other_count,priors_count,days_b_screening_arrest,c_jail_in,c_jail_out,c_charge_degree,c_charge_desc,is_recid,score_text,two_year_recid";

fn compas_row(rng: &mut ChaCha8Rng, id: usize, race: &str, force_label: Option<u8>, drop_kind: usize) -> String {
    let age = rng.gen_range(18..70);
    let priors = rng.gen_range(0..12);
    let recid_score = priors as f64 / 12.0 + rng.gen_range(-0.4..0.4);
    let label = force_label.unwrap_or(u8::from(recid_score > 0.35));
    let sex = if rng.gen_range(0.0..1.0) < 0.81 { "Male" } else { "Female" };
    let (days, degree, is_recid, score_text): (String, &str, i64, &str) = match drop_kind {
        1 => (format!("{}", rng.gen_range(31..200)), "F", label as i64, "Low"),
        2 => ("5".into(), "F", -1, "Low"),
        3 => ("5".into(), "O", label as i64, "Low"),
        4 => ("5".into(), "F", label as i64, "N/A"),
        _ => (
            format!("{}", rng.gen_range(-30..=30)),
            if rng.gen_range(0.0..1.0) < 0.64 { "F" } else { "M" },
            label as i64,
            ["Low", "Medium", "High"][rng.gen_range(0..3)],
        ),
    };
    format!(
        "{id},doe,j,doe,{sex},1980-01-01,{age},25 - 45,{race},{},{},{},{},{priors},{days},2013-01-01,2013-01-02,{degree},Theft,{is_recid},{score_text},{label}",
        rng.gen_range(0..3),
        rng.gen_range(1..10),
        rng.gen_range(0..3),
        rng.gen_range(0..3),
    )
}

fn write_compas_fixture(path: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    writeln!(f, "{COMPAS_HEADER}").unwrap();
    // kept rows shaped like the filtered dataset, including the tiny
    // Native American subgroup with both classes guaranteed
    let races: [(&str, usize); 5] = [
        ("African-American", 3175),
        ("Caucasian", 2103),
        ("Hispanic", 509),
        ("Other", 343),
        ("Asian", 31),
    ];
    let mut id = 0usize;
    for (race, count) in races {
        for _ in 0..count {
            id += 1;
            writeln!(f, "{}", compas_row(&mut rng, id, race, None, 0)).unwrap();
        }
    }
    for label in [1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0] {
        id += 1;
        writeln!(
            f,
            "{}",
            compas_row(&mut rng, id, "Native American", Some(label), 0)
        )
        .unwrap();
    }
    // rows the published filters must remove
    for kind in 1..=4 {
        for _ in 0..260 {
            id += 1;
            writeln!(f, "{}", compas_row(&mut rng, id, "Caucasian", None, kind)).unwrap();
        }
    }
}

#[test]
fn compas_scale_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("compas-scores-two-years.csv");
    write_compas_fixture(&path);
    let (pop, manifest) = load_compas(&path).unwrap();
    assert_eq!(manifest.examples, 6_172);
    assert_eq!(manifest.feature_count, 15);
    assert_eq!(manifest.dropped_rows, 1_040);
    let na_count = pop.examples.iter().filter(|e| e.z == 3).count();
    assert_eq!(na_count, 11, "tiny subgroup preserved");

    let cfg = StudyConfig {
        n_shuffles: 3,
        base_seed: 7,
        ..StudyConfig::default()
    };
    // every dataset-facing recipe survives the subgroup skew
    for recipe in [
        ModelRecipe::Logreg,
        ModelRecipe::DpLogreg { epsilon: 1.0 },
        ModelRecipe::EoLogreg,
    ] {
        let study = run_shuffle_study(&pop, recipe, &cfg)
            .unwrap_or_else(|e| panic!("{} study failed: {e}", recipe.name()));
        assert!(study.identities_pass(), "{} identities", recipe.name());
        let v = study.aggregate.discriminating.vulnerability.mean;
        assert!((0.45..0.95).contains(&v), "{} vulnerability {v}", recipe.name());
        assert!(
            study.aggregate.discriminating.max_disparity.n == 3,
            "max-disparity defined on every shuffle"
        );
    }
}
