//! Command-line front end: reproducible batch runs over the library.
//!
//! Every command is a pure function of its flags, input files, and seed;
//! reruns produce byte-identical artifacts.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adversary::AdversaryKind;
use crate::error::AuditError;
use crate::evalset::read_confidence_csv;
use crate::experiments::synth::synth_generate;
use crate::experiments::{
    audit_confidence_pools, equal_representation_sweep, permutation_disparity_test,
    run_shuffle_study, subgroup_size_sweep, DisparityStat, ModelRecipe, ShuffleStudy, StudyConfig,
    SweepKind, SyntheticSpec,
};
use crate::identities::{construction_checks, IDENTITY_TOL};
use crate::ingest::{load_adult, load_compas, read_canonical, write_canonical};
use crate::population::{LabeledExample, Population};
use crate::report::{
    pct, read_outcomes_csv, write_aggregate_json, write_gaps_csv, write_outcomes_csv,
    write_profiles_json, write_reports_json, write_significance_json, write_study_csv,
    write_sweep_csv, Meta,
};

/// Exit status used by the binary: 0 success, 1 domain error, 2 usage
/// error.
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit_code: 2,
            message: message.into(),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        CliError {
            exit_code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "mia-audit",
    version,
    about = "Membership-inference auditing with per-subgroup vulnerability analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a repeated-shuffle audit and write its artifacts
    Audit(AuditArgs),
    /// Run an audit and verify every closed-form identity on it
    VerifyIdentities(VerifyArgs),
    /// Subgroup-size or equal-representation sweep on a synthetic spec
    Sweep(SweepArgs),
    /// Permutation significance tests over a finished study directory
    Significance(SignificanceArgs),
    /// Convert a raw dataset into the canonical cache format
    Ingest(IngestArgs),
    /// Generate a synthetic population from a spec
    Datagen(DatagenArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Canonical population CSV (id,y,z,f_0..)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic population spec (JSON)
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// Precomputed model outputs (id,y,z,m,conf_0..): audits an external
    /// model without training one
    #[arg(long)]
    confidences: Option<PathBuf>,
    /// Member-pool confidences without an m column (use with
    /// --nonmember-confidences)
    #[arg(long, requires = "nonmember_confidences")]
    member_confidences: Option<PathBuf>,
    /// Non-member-pool confidences without an m column
    #[arg(long, requires = "member_confidences")]
    nonmember_confidences: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Target model recipe: logreg | mlp6 | mlp100 | mlp500 | dp-logreg | eo-logreg
    #[arg(long, default_value = "logreg")]
    model: String,
    /// Privacy budget for dp-logreg
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 35)]
    shuffles: usize,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// Cap on the training-set size per shuffle
    #[arg(long)]
    max_train: Option<usize>,
    /// Output directory
    #[arg(long, env = "MIA_AUDIT_OUT", default_value = "out")]
    out_dir: PathBuf,
    /// Also export each shuffle's evaluation set (id,y,z,m,bin)
    #[arg(long)]
    export_eval: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "logreg")]
    model: String,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    shuffles: usize,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    #[arg(long)]
    max_train: Option<usize>,
    /// Residual budget for every identity
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Synthetic population spec (JSON)
    #[arg(long)]
    synthetic: PathBuf,
    /// size: vary one subgroup; representation: vary all at equal size
    #[arg(long, value_parser = parse_sweep_kind)]
    kind: SweepKind,
    /// Target subgroup index (size sweeps)
    #[arg(long)]
    target: Option<usize>,
    /// Comma-separated increasing sizes, e.g. 100,200,400
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long, default_value = "mlp100")]
    model: String,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 3)]
    shuffles: usize,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, env = "MIA_AUDIT_OUT", default_value = "out")]
    out_dir: PathBuf,
}

fn parse_sweep_kind(s: &str) -> Result<SweepKind, String> {
    match s {
        "size" => Ok(SweepKind::SubgroupSize),
        "representation" => Ok(SweepKind::EqualRepresentation),
        other => Err(format!(
            "unknown sweep kind {other:?}; expected size or representation"
        )),
    }
}

#[derive(Args)]
struct SignificanceArgs {
    /// Study directory written by `audit`
    #[arg(long)]
    study: PathBuf,
    /// regular | discriminating
    #[arg(long, default_value = "discriminating")]
    adversary: String,
    /// Subgroup pair `z1,z2`; repeatable. Without --pair and --max, all
    /// pairs are tested.
    #[arg(long, value_delimiter = ',')]
    pair: Option<Vec<usize>>,
    /// Test the mean within-shuffle max-disparity statistic
    #[arg(long)]
    max: bool,
    #[arg(long, default_value_t = 999)]
    permutations: usize,
    /// Family-wise significance level (Bonferroni-adjusted over pairs)
    #[arg(long, default_value_t = 0.005)]
    alpha: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output JSON path (defaults to `<study>/significance.json`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// adult | compas
    #[arg(long)]
    dataset: String,
    /// Raw file (or directory holding adult.data/adult.test)
    #[arg(long)]
    raw: PathBuf,
    /// Canonical CSV output path (a .manifest.json sidecar is added)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DatagenArgs {
    /// Synthetic population spec (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Canonical CSV output path
    #[arg(long)]
    out: PathBuf,
}

/// Parses argv and runs the selected command.
pub fn run<I, T>(argv: I) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        // clap renders its own message; preserve its help/version behavior
        let code = if e.use_stderr() { 2 } else { 0 };
        e.print().ok();
        CliError {
            exit_code: code,
            message: String::new(),
        }
    })?;
    match cli.command {
        Command::Audit(args) => cmd_audit(args),
        Command::VerifyIdentities(args) => cmd_verify_identities(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Significance(args) => cmd_significance(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Datagen(args) => cmd_datagen(args),
    }
}

fn load_population(input: &InputArgs) -> Result<(Population, String), CliError> {
    match (&input.data, &input.synthetic) {
        (Some(path), None) => {
            let (pop, manifest) = read_canonical(path)?;
            let name = manifest
                .map(|m| m.name)
                .unwrap_or_else(|| path.display().to_string());
            Ok((pop, name))
        }
        (None, Some(path)) => {
            let spec = SyntheticSpec::load_json(path)?;
            Ok((
                synth_generate(&spec)?,
                format!("synthetic:{}", path.display()),
            ))
        }
        (Some(_), Some(_)) => Err(CliError::usage(
            "--data and --synthetic are mutually exclusive",
        )),
        (None, None) => Err(CliError::usage(
            "one of --data, --synthetic, or --confidences is required",
        )),
    }
}

type ConfidencePool = Vec<(LabeledExample, Vec<f64>)>;

fn split_confidence_rows(
    path: &Path,
) -> Result<(ConfidencePool, ConfidencePool, usize, usize), CliError> {
    let rows = read_confidence_csv(path)?;
    let mut members = Vec::new();
    let mut nonmembers = Vec::new();
    let mut p = 0usize;
    let mut k = 0usize;
    for row in rows {
        p = p.max(row.example.y + 1).max(row.confidence.len());
        k = k.max(row.example.z + 1);
        match row.m {
            Some(1) => members.push((row.example, row.confidence)),
            Some(0) => nonmembers.push((row.example, row.confidence)),
            _ => {
                return Err(CliError::usage(format!(
                    "{}: the m column is required to split pools (or pass the pools separately)",
                    path.display()
                )))
            }
        }
    }
    Ok((members, nonmembers, p, k))
}

/// Reads one side of a pool pair (files without an `m` column).
fn read_pool(path: &Path) -> Result<(ConfidencePool, usize, usize), CliError> {
    let rows = read_confidence_csv(path)?;
    let mut pool = Vec::new();
    let mut p = 0usize;
    let mut k = 0usize;
    for row in rows {
        p = p.max(row.example.y + 1).max(row.confidence.len());
        k = k.max(row.example.z + 1);
        pool.push((row.example, row.confidence));
    }
    Ok((pool, p, k))
}

fn run_study_from_args(
    input: &InputArgs,
    model: &str,
    epsilon: Option<f64>,
    cfg_base: StudyConfig,
    max_train: Option<usize>,
) -> Result<(ShuffleStudy, String, String), CliError> {
    let pools = match (
        &input.confidences,
        &input.member_confidences,
        &input.nonmember_confidences,
    ) {
        (Some(path), None, None) => {
            Some((split_confidence_rows(path)?, path.display().to_string()))
        }
        (None, Some(mp), Some(np)) => {
            let (members, p1, k1) = read_pool(mp)?;
            let (nonmembers, p2, k2) = read_pool(np)?;
            Some((
                (members, nonmembers, p1.max(p2), k1.max(k2)),
                format!("{}+{}", mp.display(), np.display()),
            ))
        }
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(CliError::usage(
                "--confidences cannot be combined with the pool-pair flags",
            ))
        }
        _ => None,
    };
    if let Some(((members, nonmembers, p, k), source)) = pools {
        if input.data.is_some() || input.synthetic.is_some() {
            return Err(CliError::usage(
                "confidence inputs cannot be combined with --data/--synthetic",
            ));
        }
        let cfg = StudyConfig {
            max_train,
            ..cfg_base
        };
        let study = audit_confidence_pools(&members, &nonmembers, p, k, &cfg)?;
        return Ok((study, format!("confidences:{source}"), "external".into()));
    }
    let recipe = ModelRecipe::parse(model, epsilon).map_err(|e| CliError::usage(e.to_string()))?;
    let (pop, dataset) = load_population(input)?;
    let cfg = StudyConfig {
        max_train: max_train.or_else(|| recipe.default_max_train()),
        ..cfg_base
    };
    let study = run_shuffle_study(&pop, recipe, &cfg)?;
    Ok((study, dataset, recipe.name().to_string()))
}

fn print_study_summary(study: &ShuffleStudy, dataset: &str, model: &str) {
    let a = &study.aggregate;
    println!(
        "audit: dataset={dataset} model={model} shuffles={}",
        study.results.len()
    );
    if a.test_accuracy.n > 0 {
        println!(
            "  test accuracy      {:6.2} ± {:.2} p.p.   overfitting {:6.2} ± {:.2} p.p.",
            pct(a.test_accuracy.mean),
            pct(a.test_accuracy.std),
            pct(a.overfitting.mean),
            pct(a.overfitting.std)
        );
    }
    for (name, adv) in [
        ("regular", &a.regular),
        ("discriminating", &a.discriminating),
    ] {
        let md = &adv.max_disparity;
        println!(
            "  {name:<15} vulnerability {:6.2} ± {:5.2} p.p.   max-disparity {:6.2} ± {:5.2} p.p.",
            pct(adv.vulnerability.mean),
            pct(adv.vulnerability.std),
            if md.n > 0 { pct(md.mean) } else { f64::NAN },
            if md.n > 0 { pct(md.std) } else { f64::NAN },
        );
    }
}

fn command_echo(parts: &[String]) -> String {
    parts.join(" ")
}

fn cmd_audit(args: AuditArgs) -> CliResult {
    let cfg = StudyConfig {
        n_shuffles: args.shuffles,
        base_seed: args.seed,
        bins: args.bins,
        train_fraction: args.train_fraction,
        max_train: None,
        export_eval_dir: args.export_eval.then(|| args.out_dir.clone()),
    };
    let (study, dataset, model) =
        run_study_from_args(&args.input, &args.model, args.epsilon, cfg, args.max_train)?;
    std::fs::create_dir_all(&args.out_dir).map_err(AuditError::from)?;
    let echo = command_echo(&[
        "audit".into(),
        format!("dataset={dataset}"),
        format!("model={model}"),
        format!("shuffles={}", args.shuffles),
        format!("bins={}", args.bins),
        format!("train_fraction={}", args.train_fraction),
    ]);
    let meta = Meta::new(echo, args.seed);
    write_study_csv(&study, &meta, &args.out_dir.join("study.csv"))?;
    write_aggregate_json(&study, &meta, &args.out_dir.join("aggregate.json"))?;
    write_reports_json(&study, &meta, &args.out_dir.join("reports.json"))?;
    write_profiles_json(&study, &meta, &args.out_dir.join("profiles.json"))?;
    write_gaps_csv(&study, &meta, &args.out_dir.join("gaps.csv"))?;
    write_outcomes_csv(&study, &meta, &args.out_dir.join("outcomes.csv"))?;
    print_study_summary(&study, &dataset, &model);
    println!("artifacts written to {}", args.out_dir.display());
    Ok(())
}

fn cmd_verify_identities(args: VerifyArgs) -> CliResult {
    let cfg = StudyConfig {
        n_shuffles: args.shuffles,
        base_seed: args.seed,
        bins: args.bins,
        train_fraction: args.train_fraction,
        max_train: None,
        export_eval_dir: None,
    };
    let (study, dataset, model) =
        run_study_from_args(&args.input, &args.model, args.epsilon, cfg, args.max_train)?;
    let mut worst: Vec<(String, f64)> = Vec::new();
    for r in &study.results {
        for c in &r.identity.checks {
            match worst.iter_mut().find(|(n, _)| *n == c.name) {
                Some((_, v)) => *v = v.max(c.residual),
                None => worst.push((c.name.clone(), c.residual)),
            }
        }
    }
    let constructed = construction_checks(25, args.seed, IDENTITY_TOL)?;
    for c in &constructed.checks {
        worst.push((c.name.clone(), c.residual));
    }
    println!(
        "identity residuals: dataset={dataset} model={model} shuffles={}",
        study.results.len()
    );
    let mut failed = 0usize;
    for (name, residual) in &worst {
        let ok = *residual <= args.tolerance;
        if !ok {
            failed += 1;
        }
        println!(
            "  {} {name:<40} {residual:.3e}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        return Err(CliError {
            exit_code: 1,
            message: format!(
                "{failed} identities exceeded the {} tolerance",
                args.tolerance
            ),
        });
    }
    println!("all identities hold within {:.1e}", args.tolerance);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    if args.grid.is_empty() {
        return Err(CliError::usage("--grid must list at least one size"));
    }
    let recipe = ModelRecipe::parse(&args.model, args.epsilon)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let spec = SyntheticSpec::load_json(&args.synthetic)?;
    let cfg = StudyConfig {
        n_shuffles: args.shuffles,
        base_seed: args.seed,
        bins: args.bins,
        train_fraction: 0.5,
        max_train: None,
        export_eval_dir: None,
    };
    let sweep = match args.kind {
        SweepKind::SubgroupSize => {
            let target = args
                .target
                .ok_or_else(|| CliError::usage("size sweeps require --target"))?;
            subgroup_size_sweep(&spec, target, &args.grid, recipe, &cfg)?
        }
        SweepKind::EqualRepresentation => {
            if args.target.is_some() {
                return Err(CliError::usage("--target only applies to size sweeps"));
            }
            equal_representation_sweep(&spec, &args.grid, recipe, &cfg)?
        }
    };
    std::fs::create_dir_all(&args.out_dir).map_err(AuditError::from)?;
    let echo = command_echo(&[
        "sweep".into(),
        format!("kind={:?}", args.kind),
        format!("model={}", recipe.name()),
        format!("grid={:?}", args.grid),
        format!("shuffles={}", args.shuffles),
    ]);
    let meta = Meta::new(echo, args.seed);
    let path = args.out_dir.join("sweep.csv");
    write_sweep_csv(&sweep, &meta, &path)?;
    println!(
        "sweep of {} points written to {}",
        sweep.points.len(),
        path.display()
    );
    Ok(())
}

fn cmd_significance(args: SignificanceArgs) -> CliResult {
    let adversary = match args.adversary.as_str() {
        "regular" => AdversaryKind::Regular,
        "discriminating" => AdversaryKind::Discriminating,
        other => {
            return Err(CliError::usage(format!(
                "unknown adversary {other:?}; expected regular or discriminating"
            )))
        }
    };
    let outcomes_path = args.study.join("outcomes.csv");
    if !outcomes_path.exists() {
        return Err(CliError {
            exit_code: 1,
            message: format!(
                "{}: missing outcomes.csv (run `mia-audit audit` first)",
                args.study.display()
            ),
        });
    }
    // subgroup count from the study's aggregate artifact
    let aggregate_path = args.study.join("aggregate.json");
    let k = if aggregate_path.exists() {
        let doc: serde_json::Value = serde_json::from_reader(
            std::fs::File::open(&aggregate_path).map_err(AuditError::from)?,
        )
        .map_err(AuditError::from)?;
        doc["num_subgroups"].as_u64().unwrap_or(0) as usize
    } else {
        0
    };
    let mut outcomes = read_outcomes_csv(&outcomes_path, k)?;
    if outcomes.num_subgroups == 0 {
        outcomes.num_subgroups = outcomes
            .shuffles
            .iter()
            .flat_map(|s| s.iter().map(|o| o.z as usize + 1))
            .max()
            .unwrap_or(1);
    }

    let mut stats: Vec<DisparityStat> = Vec::new();
    if args.max {
        stats.push(DisparityStat::MaxDisparity);
    }
    if let Some(pair) = &args.pair {
        if pair.len() != 2 {
            return Err(CliError::usage(
                "--pair expects exactly two subgroup indices",
            ));
        }
        stats.push(DisparityStat::Pair {
            z1: pair[0],
            z2: pair[1],
        });
    }
    if stats.is_empty() {
        for z1 in 0..outcomes.num_subgroups {
            for z2 in (z1 + 1)..outcomes.num_subgroups {
                stats.push(DisparityStat::Pair { z1, z2 });
            }
        }
    }
    let n_pair_tests = stats
        .iter()
        .filter(|s| matches!(s, DisparityStat::Pair { .. }))
        .count()
        .max(1);

    let mut results = Vec::new();
    for stat in stats {
        let test =
            permutation_disparity_test(&outcomes, adversary, stat, args.permutations, args.seed)?;
        let adjusted = match stat {
            DisparityStat::Pair { .. } => args.alpha / n_pair_tests as f64,
            DisparityStat::MaxDisparity => args.alpha,
        };
        let reject = test.p_value <= adjusted;
        println!(
            "  {:<28} observed {:6.2} p.p.  p = {:.4}  reject@{:.2e} = {}",
            format!("{stat:?}"),
            pct(test.observed),
            test.p_value,
            adjusted,
            u8::from(reject),
        );
        results.push((test, adjusted, reject));
    }
    let out = args
        .out
        .unwrap_or_else(|| args.study.join("significance.json"));
    let echo = command_echo(&[
        "significance".into(),
        format!("study={}", args.study.display()),
        format!("adversary={}", adversary),
        format!("permutations={}", args.permutations),
        format!("alpha={}", args.alpha),
    ]);
    write_significance_json(&results, args.alpha, &Meta::new(echo, args.seed), &out)?;
    println!("significance results written to {}", out.display());
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> CliResult {
    let (pop, manifest) = match args.dataset.as_str() {
        "adult" => load_adult(&args.raw)?,
        "compas" => load_compas(&args.raw)?,
        other => {
            return Err(CliError::usage(format!(
                "unknown dataset {other:?}; expected adult or compas"
            )))
        }
    };
    write_canonical(&pop, &manifest, &args.out)?;
    println!(
        "ingested {}: {} examples, {} features, subgroups {:?}, {} rows dropped",
        manifest.name,
        manifest.examples,
        manifest.feature_count,
        manifest.subgroup_names,
        manifest.dropped_rows
    );
    println!("canonical cache written to {}", args.out.display());
    Ok(())
}

fn cmd_datagen(args: DatagenArgs) -> CliResult {
    let spec = SyntheticSpec::load_json(&args.spec)?;
    let pop = synth_generate(&spec)?;
    pop.write_canonical_csv(&args.out)?;
    println!(
        "generated {} examples ({} classes, {} subgroups) to {}",
        pop.len(),
        pop.num_classes,
        pop.num_subgroups,
        args.out.display()
    );
    Ok(())
}
