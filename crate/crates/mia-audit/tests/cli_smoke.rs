//! End-to-end runs of the `mia-audit` binary.

use std::path::Path;
use std::process::{Command, Output};

use mia_audit::experiments::{CellSpec, SubgroupSpec, SyntheticSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mia-audit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_spec(dir: &Path) -> std::path::PathBuf {
    let spec = SyntheticSpec {
        num_classes: 2,
        feature_dim: 2,
        subgroups: (0..2)
            .map(|z| SubgroupSpec {
                size: 200,
                class_weights: vec![0.5, 0.5],
                cells: vec![
                    CellSpec {
                        mean: vec![10.0 * z as f64, 0.0],
                        scale: 1.0,
                    },
                    CellSpec {
                        mean: vec![10.0 * z as f64 + 1.5, 0.0],
                        scale: 1.0,
                    },
                ],
            })
            .collect(),
        seed: 5,
    };
    let path = dir.join("spec.json");
    spec.save_json(&path).unwrap();
    path
}

#[test]
fn audit_writes_parseable_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "audit",
            "--synthetic",
            spec.to_str().unwrap(),
            "--model",
            "logreg",
            "--shuffles",
            "2",
            "--seed",
            "7",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    for name in [
        "study.csv",
        "aggregate.json",
        "reports.json",
        "profiles.json",
        "gaps.csv",
        "outcomes.csv",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let aggregate: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(out_a.join("aggregate.json")).unwrap())
            .unwrap();
    let v = aggregate["discriminating"]["vulnerability"]["mean"]
        .as_f64()
        .unwrap();
    assert!((0.0..=1.0).contains(&v));
    assert_eq!(aggregate["identities_pass"], serde_json::Value::Bool(true));
}

#[test]
fn single_shuffle_audit_and_significance_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let out = dir.path().join("study");
    let output = run(&[
        "audit",
        "--synthetic",
        spec.to_str().unwrap(),
        "--shuffles",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let output = run(&[
        "significance",
        "--study",
        out.to_str().unwrap(),
        "--permutations",
        "99",
        "--seed",
        "3",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(out.join("significance.json")).unwrap())
            .unwrap();
    let p = doc["tests"][0]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn verify_identities_passes_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let output = run(&[
        "verify-identities",
        "--synthetic",
        spec.to_str().unwrap(),
        "--shuffles",
        "1",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("closed_form.overall.regular"));
    assert!(stdout.contains("all identities hold"));
}

#[test]
fn datagen_then_audit_from_canonical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let pop_csv = dir.path().join("pop.csv");
    let output = run(&[
        "datagen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        pop_csv.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let out = dir.path().join("study");
    let output = run(&[
        "audit",
        "--data",
        pop_csv.to_str().unwrap(),
        "--shuffles",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn sweep_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let out = dir.path().join("sweep");
    let output = run(&[
        "sweep",
        "--synthetic",
        spec.to_str().unwrap(),
        "--kind",
        "size",
        "--target",
        "0",
        "--grid",
        "100,200",
        "--model",
        "logreg",
        "--shuffles",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.contains("grid_value,adversary,subgroup"));
    assert!(csv.lines().filter(|l| l.starts_with("100,")).count() >= 3);
}

#[test]
fn confidence_pool_pair_flags_audit_external_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let write_pool = |name: &str, prefix: &str| {
        use std::io::Write;
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "id,y,z,conf_0,conf_1").unwrap();
        for i in 0..40 {
            let y = i % 2;
            let c1 = 0.1 + 0.02 * (i % 30) as f64;
            writeln!(f, "{prefix}{i},{y},{},{},{}", i % 2, 1.0 - c1, c1).unwrap();
        }
        path
    };
    let members = write_pool("members.csv", "m");
    let nonmembers = write_pool("nonmembers.csv", "n");
    let out = dir.path().join("study");
    let output = run(&[
        "audit",
        "--member-confidences",
        members.to_str().unwrap(),
        "--nonmember-confidences",
        nonmembers.to_str().unwrap(),
        "--shuffles",
        "1",
        "--export-eval",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let eval = std::fs::read_to_string(out.join("eval_0.csv")).unwrap();
    assert!(eval.starts_with("id,y,z,m,bin"));
    assert!(eval.lines().count() > 40);

    // single-file variant with the m column
    use std::io::Write;
    let single = dir.path().join("confidences.csv");
    let mut f = std::fs::File::create(&single).unwrap();
    writeln!(f, "id,y,z,m,conf_0,conf_1").unwrap();
    for i in 0..64 {
        let c1 = 0.05 + 0.015 * (i % 50) as f64;
        let (y, z, m) = (i % 2, (i / 2) % 2, (i / 4) % 2);
        writeln!(f, "s{i},{y},{z},{m},{},{}", 1.0 - c1, c1).unwrap();
    }
    drop(f);
    let out2 = dir.path().join("study2");
    let output = run(&[
        "audit",
        "--confidences",
        single.to_str().unwrap(),
        "--shuffles",
        "1",
        "--out-dir",
        out2.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out2.join("aggregate.json").exists());
}

#[test]
fn usage_errors_exit_with_code_2() {
    // unknown recipe
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let output = run(&[
        "audit",
        "--synthetic",
        spec.to_str().unwrap(),
        "--model",
        "resnet",
    ]);
    assert_eq!(output.status.code(), Some(2));
    // no input at all
    let output = run(&["audit"]);
    assert_eq!(output.status.code(), Some(2));
    // empty sweep grid is rejected by clap as a missing argument
    let output = run(&[
        "sweep",
        "--synthetic",
        spec.to_str().unwrap(),
        "--kind",
        "size",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_code_1() {
    let output = run(&[
        "significance",
        "--study",
        "/nonexistent-study-dir",
        "--permutations",
        "99",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn too_few_permutations_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let out = dir.path().join("study");
    assert!(run(&[
        "audit",
        "--synthetic",
        spec.to_str().unwrap(),
        "--shuffles",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let output = run(&[
        "significance",
        "--study",
        out.to_str().unwrap(),
        "--permutations",
        "50",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("99"));
}
