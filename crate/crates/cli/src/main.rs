//! `shm`: command-line front end for the structural inspection toolkit.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a data error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use shm_core::classes::DamageState;
use shm_core::dataset::{
    audit_collisions, balance_by_undersampling, build_foreground_masks, class_pixel_stats, extract_defect_crops,
    extract_surface_patches, generate_fixture_dataset, split_dataset, write_defect_crops, write_surface_patches,
    FixtureSpec, DEFAULT_PADDING, DEFAULT_TEST_FRACTION, MIN_INSTANCE_PIXELS,
};
use shm_core::geometry::PATCH_SIDE;
use shm_core::io;
use shm_core::manifest::{load_manifest, Layer, Manifest};
use shm_core::models::{
    fit_decision_tree, fit_naive_bayes, fit_random_forest, labeled_features, ClassifierNode, ConstantNode,
    ExternalMaskNode, FeatureVector, ForestParams, LabelStore, ModelNode, OracleNode, ShallowModel, Stage,
    TrainingSet, DEFAULT_MAX_DEPTH, DEFAULT_TREES,
};
use shm_core::pipeline::{evaluate_pipeline, run_batch, write_report, BatchFailure, PipelineConfig, PipelineParams};
use shm_core::ImageRecord;

/// Post-earthquake structural inspection toolkit.
#[derive(Debug, Parser)]
#[command(name = "shm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split an unsplit manifest into train.json and test.json.
    Split(SplitArgs),
    /// Count defect-class collisions and per-class pixel statistics.
    Audit(AuditArgs),
    /// Derive training datasets from a labelled manifest.
    Prepare(PrepareArgs),
    /// Fit a shallow damage-state classifier on labelled component features.
    Fit(FitArgs),
    /// Run the staged pipeline and write per-image reports and overlays.
    Run(PipelineArgs),
    /// Run the staged pipeline and score every stage against ground truth.
    Eval(PipelineArgs),
    /// Generate the synthetic fixture dataset with its ground-truth sidecar.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for train.json and test.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    test_fraction: f64,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrepareKind {
    /// Foreground masks derived from component labels.
    Task0,
    /// Padded per-instance crops for each defect class.
    Defects,
    /// Rectified component surface patches labelled by damage state.
    Surfaces,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    kind: PrepareKind,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Crop padding per side, as a fraction of the instance box.
    #[arg(long, default_value_t = DEFAULT_PADDING)]
    padding: f64,
    #[arg(long, default_value_t = MIN_INSTANCE_PIXELS)]
    min_instance_pixels: usize,
    /// Side of the square surface patches.
    #[arg(long, default_value_t = PATCH_SIDE)]
    patch_side: u32,
    /// Undersample surface patches to equal counts per state (needs --seed).
    #[arg(long)]
    balance: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Tree,
    Forest,
    Nb,
}

#[derive(Debug, Args)]
struct FitArgs {
    kind: ModelKind,
    #[arg(long)]
    manifest: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Required for forests and for --balance.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = DEFAULT_TREES)]
    n_trees: usize,
    /// Candidate features per forest split; default ceil(sqrt(d)).
    #[arg(long)]
    max_features: Option<usize>,
    /// Grow every forest tree on all rows instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
    /// Min-max normalize features before naive Bayes.
    #[arg(long)]
    normalize: bool,
    /// Undersample rows to equal counts per damage state.
    #[arg(long)]
    balance: bool,
    #[arg(long, default_value_t = MIN_INSTANCE_PIXELS)]
    min_instance_pixels: usize,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Bind every stage not bound explicitly to the ground-truth oracle.
    #[arg(long)]
    oracle_all: bool,
    /// Foreground node: oracle, external:DIR or constant:CODE.
    #[arg(long)]
    foreground: Option<String>,
    /// Component node: oracle, external:DIR or constant:CODE.
    #[arg(long)]
    components: Option<String>,
    /// Cracking node: oracle, external:DIR or constant:CODE.
    #[arg(long)]
    cracking: Option<String>,
    /// Spalling node: oracle, external:DIR or constant:CODE.
    #[arg(long)]
    spalling: Option<String>,
    /// Exposed-rebar node: oracle, external:DIR or constant:CODE.
    #[arg(long)]
    rebar: Option<String>,
    /// Damage-state node: oracle, external:DIR or model:FILE.
    #[arg(long)]
    damage: Option<String>,
    #[arg(long, default_value_t = DEFAULT_PADDING)]
    padding: f64,
    #[arg(long, default_value_t = MIN_INSTANCE_PIXELS)]
    min_instance_pixels: usize,
    #[arg(long, default_value_t = PATCH_SIDE)]
    patch_side: u32,
    #[arg(long, default_value_t = 0.45)]
    overlay_alpha: f64,
    /// Worker threads for per-image parallelism; 0 uses every core.
    #[arg(long, env = "SHM_JOBS", default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// JSON file with fixture parameters; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    #[arg(long)]
    collision_probability: Option<f64>,
}

/// Invalid invocation detected after parsing; exits with code 1.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn require_seed(seed: Option<u64>, why: &str) -> Result<u64> {
    seed.ok_or_else(|| usage(format!("--seed is required {why}")))
}

fn load(path: &Path) -> Result<Manifest> {
    load_manifest(path).with_context(|| format!("loading manifest {}", path.display()))
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(usage("--test-fraction must lie strictly between 0 and 1"));
    }
    let manifest = load(&a.manifest)?;
    let (train, test) = split_dataset(&manifest, a.test_fraction, a.seed)?;
    io::ensure_dir(&a.out)?;
    train.save(&a.out.join("train.json"))?;
    test.save(&a.out.join("test.json"))?;
    println!("train {} test {}", train.len(), test.len());
    Ok(())
}

fn cmd_audit(a: AuditArgs) -> Result<()> {
    let manifest = load(&a.manifest)?;
    io::ensure_dir(&a.out)?;
    let collisions = audit_collisions(&manifest)?;
    io::write_json(&a.out.join("collisions.json"), &collisions)?;
    std::fs::write(a.out.join("collisions.csv"), collisions.to_csv_table())?;
    let mut written = Vec::new();
    for layer in Layer::MASKS {
        if manifest.entries.iter().all(|e| e.layer_path(layer).is_some()) {
            let stats = class_pixel_stats(&manifest, layer)?;
            io::write_json(&a.out.join(format!("pixel_stats_{}.json", layer.name())), &stats)?;
            written.push(layer.name());
        }
    }
    println!("audited {} images; pixel statistics for: {}", collisions.images, written.join(", "));
    Ok(())
}

fn cmd_prepare(a: PrepareArgs) -> Result<()> {
    if a.balance && !matches!(a.kind, PrepareKind::Surfaces) {
        return Err(usage("--balance applies to surfaces only"));
    }
    let seed = if a.balance { Some(require_seed(a.seed, "with --balance")?) } else { None };
    let manifest = load(&a.manifest)?;
    io::ensure_dir(&a.out)?;
    match a.kind {
        PrepareKind::Task0 => {
            let out = build_foreground_masks(&manifest, &a.out)?;
            out.save(&a.out.join("manifest.json"))?;
            println!("wrote {} foreground masks", out.len());
        }
        PrepareKind::Defects => {
            let mut crops = Vec::new();
            for rec in manifest.records() {
                crops.extend(extract_defect_crops(&rec?, a.padding, a.min_instance_pixels)?);
            }
            write_defect_crops(&crops, &a.out)?;
            println!("wrote {} defect crops", crops.len());
        }
        PrepareKind::Surfaces => {
            let mut patches = Vec::new();
            for rec in manifest.records() {
                patches.extend(extract_surface_patches(&rec?, a.min_instance_pixels, a.patch_side)?);
            }
            if let Some(seed) = seed {
                patches = balance_by_undersampling(&patches, |p| p.state, seed)?;
            }
            write_surface_patches(&patches, &a.out)?;
            println!("wrote {} surface patches", patches.len());
        }
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let seed = match (a.kind, a.balance) {
        (ModelKind::Forest, _) => Some(require_seed(a.seed, "for forests")?),
        (_, true) => Some(require_seed(a.seed, "with --balance")?),
        _ => a.seed,
    };
    if a.normalize && !matches!(a.kind, ModelKind::Nb) {
        return Err(usage("--normalize applies to nb only"));
    }
    let manifest = load(&a.manifest)?;
    let mut items: Vec<(FeatureVector, DamageState)> = Vec::new();
    for rec in manifest.records() {
        let rec: ImageRecord = rec?;
        items.extend(labeled_features(&rec, a.min_instance_pixels).with_context(|| format!("features of `{}`", rec.id))?);
    }
    if a.balance {
        items = balance_by_undersampling(&items, |it| it.1, seed.expect("checked above"))?;
    }
    let data = TrainingSet::from_features(&items);
    let model = match a.kind {
        ModelKind::Tree => ShallowModel::DecisionTree(fit_decision_tree(&data, a.max_depth)?),
        ModelKind::Nb => ShallowModel::NaiveBayes(fit_naive_bayes(&data, a.normalize)?),
        ModelKind::Forest => {
            let params = ForestParams {
                n_trees: a.n_trees,
                max_depth: a.max_depth,
                max_features: a.max_features,
                bootstrap: !a.no_bootstrap,
                seed: seed.expect("checked above"),
            };
            ShallowModel::RandomForest(fit_random_forest(&data, params)?)
        }
    };
    model.save(&a.out)?;
    println!("{} fitted on {} rows, training accuracy {:.4}", model.name(), data.len(), model.accuracy(&data)?);
    Ok(())
}

fn bind(stage: Stage, spec: &str, labels: &Arc<LabelStore>) -> Result<Arc<dyn ModelNode>> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let node: Arc<dyn ModelNode> = match (kind, stage) {
        ("oracle", _) if arg.is_empty() => Arc::new(OracleNode::new(stage, labels.clone())),
        ("external", _) if !arg.is_empty() => Arc::new(ExternalMaskNode::new(stage, arg)),
        ("constant", s) if s.is_segmentation() => {
            let code: u8 = arg.parse().map_err(|_| usage(format!("--{stage}: `{arg}` is not a code")))?;
            Arc::new(ConstantNode::new(stage, code).map_err(|e| usage(format!("--{stage}: {e}")))?)
        }
        ("model", Stage::Damage) if !arg.is_empty() => {
            Arc::new(ClassifierNode::load(Path::new(arg)).with_context(|| format!("loading model {arg}"))?)
        }
        _ => return Err(usage(format!("--{stage}: unsupported binding `{spec}`"))),
    };
    Ok(node)
}

fn pipeline_config(a: &PipelineArgs, manifest: &Manifest) -> Result<PipelineConfig> {
    let params = PipelineParams {
        padding_fraction: a.padding,
        patch_side: a.patch_side,
        min_instance_pixels: a.min_instance_pixels,
        overlay_alpha: a.overlay_alpha,
        ..PipelineParams::default()
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let labels = Arc::new(LabelStore::from_manifest(manifest));
    let given = [
        (Stage::Foreground, &a.foreground),
        (Stage::Components, &a.components),
        (Stage::Defect(shm_core::DefectClass::Cracking), &a.cracking),
        (Stage::Defect(shm_core::DefectClass::Spalling), &a.spalling),
        (Stage::Defect(shm_core::DefectClass::ExposedRebar), &a.rebar),
        (Stage::Damage, &a.damage),
    ];
    let mut nodes = Vec::new();
    for (stage, spec) in given {
        let spec = match (spec, a.oracle_all) {
            (Some(s), _) => s.as_str(),
            (None, true) => "oracle",
            (None, false) => return Err(usage(format!("no node bound to {stage}; pass --{stage} or --oracle-all"))),
        };
        nodes.push(bind(stage, spec, &labels)?);
    }
    Ok(PipelineConfig::new(nodes, params)?)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn report_failures(failures: &[BatchFailure]) {
    for f in failures {
        eprintln!("error: {}: {}", f.image_id, f.message);
    }
}

fn cmd_run(a: PipelineArgs) -> Result<bool> {
    let manifest = load(&a.manifest)?;
    let cfg = pipeline_config(&a, &manifest)?;
    io::ensure_dir(&a.out)?;
    let items = thread_pool(a.jobs)?.install(|| run_batch(&cfg, &manifest));
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for item in items {
        match item.result {
            Ok(report) => {
                write_report(&report, &a.out)?;
                done.push(item.image_id);
            }
            Err(e) => failures.push(BatchFailure::new(&item.image_id, &e)),
        }
    }
    let summary = serde_json::json!({
        "images": manifest.len(),
        "succeeded": done,
        "failures": failures,
    });
    io::write_json(&a.out.join("summary.json"), &summary)?;
    report_failures(&failures);
    println!("processed {} of {} images", done.len(), manifest.len());
    Ok(failures.is_empty())
}

fn cmd_eval(a: PipelineArgs) -> Result<bool> {
    let manifest = load(&a.manifest)?;
    let cfg = pipeline_config(&a, &manifest)?;
    io::ensure_dir(&a.out)?;
    let summary = thread_pool(a.jobs)?.install(|| evaluate_pipeline(&cfg, &manifest))?;
    io::write_json(&a.out.join("summary.json"), &summary)?;
    for (name, report) in &summary.stages {
        std::fs::write(a.out.join(format!("{name}.csv")), report.to_csv_table()?)
            .with_context(|| format!("writing {name}.csv"))?;
        match report.headline() {
            Some(v) => println!("{name}: {v:.6}"),
            None => println!("{name}: n/a"),
        }
    }
    report_failures(&summary.failures);
    Ok(summary.failures.is_empty())
}

fn cmd_fixture(a: FixtureArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => io::read_json::<FixtureSpec>(p)?,
        None => FixtureSpec::default(),
    };
    if let Some(v) = a.images {
        spec.images = v;
    }
    if let Some(v) = a.width {
        spec.width = v;
    }
    if let Some(v) = a.height {
        spec.height = v;
    }
    if let Some(v) = a.collision_probability {
        spec.collision_probability = v;
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let (manifest, sidecar) = generate_fixture_dataset(&spec, a.seed, &a.out)?;
    println!("wrote {} images, {} instances", manifest.len(), sidecar.totals.instances);
    Ok(())
}

/// Context messages down to the first library error, whose own message
/// already embeds its sources.
fn describe(e: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for cause in e.chain() {
        parts.push(cause.to_string());
        if cause.is::<shm_core::Error>() {
            break;
        }
    }
    parts.join(": ")
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Split(a) => cmd_split(a).map(|_| true),
        Command::Audit(a) => cmd_audit(a).map(|_| true),
        Command::Prepare(a) => cmd_prepare(a).map(|_| true),
        Command::Fit(a) => cmd_fit(a).map(|_| true),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Fixture(a) => cmd_fixture(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
