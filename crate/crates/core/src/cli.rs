//! Command-line front end. Every subcommand reads CSV/PLY/XYZ/JSON files,
//! calls into the library and writes machine-readable outputs; stdout carries
//! human summaries and stderr carries progress.
//!
//! All randomness starts from `--seed` (or `seed` in the run config) and is
//! fanned out with [`crate::rng::derive_seed_path`]: fold assignment and
//! cross-validation use the seed directly, `train` derives its model seeds
//! exactly as fold 0 of cross-validation would, and `importance` derives
//! `[IMPORTANCE]` from it.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{load_model, save_model, EnsembleError, ForestModel, GbdtConfig, RfConfig};
use crate::evaluation::{
    assign_spatial_folds, cell_of, cross_validate, fit_model, permutation_importance,
    render_summary, write_importance_csv, write_report_csv, Cell as GridCell, CvConfig, EvalError,
    ModelChoice, DEFAULT_FOLDS, DEFAULT_GRID_SIZE_M, DEFAULT_VALIDATION_FRACTION,
};
use crate::features::{extract_features, FeatureConfig, FeatureError, FeatureMatrix};
use crate::io::{self, read_cloud, write_cloud, IoError, PointCloud};
use crate::labeling::{
    c2c_label, retention_filter, LabelError, LabeledCloud, DEFAULT_RETENTION_MM,
};
use crate::neighborhood::KRange;
use crate::rng::{derive_seed_path, tags};
use crate::synthetic::{generate_pair, SceneError, SceneSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: `{key}` {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn config_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSection {
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
    pub cell_size: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        let d = FeatureConfig::default();
        Self {
            k_min: d.k_range.k_min,
            k_max: d.k_range.k_max,
            k_step: d.k_range.k_step,
            cell_size: d.cell_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelSection {
    pub threshold_mm: f64,
}

impl Default for LabelSection {
    fn default() -> Self {
        Self {
            threshold_mm: DEFAULT_RETENTION_MM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub grid_size_m: f64,
    pub folds: usize,
    pub validation_fraction: f64,
    pub importance_repeats: usize,
    pub models: Vec<ModelChoice>,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            grid_size_m: DEFAULT_GRID_SIZE_M,
            folds: DEFAULT_FOLDS,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            importance_repeats: 0,
            models: vec![ModelChoice::Rf, ModelChoice::Gbdt],
        }
    }
}

/// Every tunable of a run. Loaded from `--config` (TOML), then overridden by
/// command-line flags, then validated before any work starts.
///
/// The `seed` fields inside `[rf]` and `[gbdt]` are ignored: model seeds are
/// derived from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; absent means all cores.
    pub threads: Option<usize>,
    pub features: FeatureSection,
    pub label: LabelSection,
    pub cv: CvSection,
    pub rf: RfConfig,
    pub gbdt: GbdtConfig,
}

/// `section.key` for the text at `span`, using the last table header above it.
fn qualified_key(text: &str, span: std::ops::Range<usize>) -> String {
    let key = text[span.clone()].trim().trim_matches('"');
    let section = text[..span.start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    match section {
        Some(s) if !key.starts_with('[') => format!("{s}.{key}"),
        _ => key.to_string(),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| CliError::Config {
            key: e
                .span()
                .map_or_else(String::new, |s| qualified_key(text, s)),
            message: e.message().to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            k_range: KRange::new(
                self.features.k_min,
                self.features.k_max,
                self.features.k_step,
            ),
            cell_size: self.features.cell_size,
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            models: self.cv.models.clone(),
            rf: self.rf.clone(),
            gbdt: self.gbdt.clone(),
            validation_fraction: self.cv.validation_fraction,
            importance_repeats: self.cv.importance_repeats,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.features;
        if f.k_min == 0 {
            return Err(config_error("features.k_min", "must be at least 1"));
        }
        if f.k_step == 0 {
            return Err(config_error("features.k_step", "must be at least 1"));
        }
        if f.k_max < f.k_min {
            return Err(config_error(
                "features.k_max",
                format!("must be >= k_min ({})", f.k_min),
            ));
        }
        if !(f.cell_size > 0.0 && f.cell_size.is_finite()) {
            return Err(config_error("features.cell_size", "must be positive"));
        }
        if !(self.label.threshold_mm > 0.0) {
            return Err(config_error("label.threshold_mm", "must be positive"));
        }
        let cv = &self.cv;
        if !(cv.grid_size_m > 0.0 && cv.grid_size_m.is_finite()) {
            return Err(config_error("cv.grid_size_m", "must be positive"));
        }
        if cv.folds < 2 {
            return Err(config_error("cv.folds", "must be at least 2"));
        }
        if !(cv.validation_fraction > 0.0 && cv.validation_fraction < 1.0) {
            return Err(config_error("cv.validation_fraction", "must be in (0, 1)"));
        }
        if cv.models.is_empty() {
            return Err(config_error("cv.models", "must name at least one model"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", "must be at least 1"));
        }
        let prefixed = |section: &str, e: EnsembleError| match e {
            EnsembleError::InvalidConfig(m) => {
                let field = m.split_whitespace().next().unwrap_or_default();
                config_error(&format!("{section}.{field}"), m[field.len()..].trim_start())
            }
            other => other.into(),
        };
        self.rf.validate().map_err(|e| prefixed("rf", e))?;
        self.gbdt.validate().map_err(|e| prefixed("gbdt", e))?;
        Ok(())
    }
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Parser)]
#[command(
    name = "mls-uncertainty",
    version,
    about = "Per-point uncertainty prediction for MLS point clouds"
)]
pub struct Cli {
    /// Top-level seed; every random choice is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML run config; flags win over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the 27 per-point features of an MLS cloud.
    Features(FeaturesArgs),
    /// Label MLS points with their C2C distance to the reference.
    Label(LabelArgs),
    /// Train one model on all retained labels.
    Train(TrainArgs),
    /// Predict C2C distances and write them as a PLY scalar.
    Predict(PredictArgs),
    /// Spatially blocked cross-validation of one or both models.
    Evaluate(EvaluateArgs),
    /// Permutation importance of a trained model.
    Importance(ImportanceArgs),
    /// Generate a synthetic reference/MLS pair.
    Synth(SynthArgs),
    /// features, label, evaluate, then train and predict with every model.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct FeatureFlags {
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub k_step: Option<usize>,
    /// XY raster cell size for the grid features (m).
    #[arg(long)]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CvFlags {
    /// Number of spatial folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Fold grid cell size (m).
    #[arg(long)]
    pub grid_size: Option<f64>,
    /// Comma-separated models to run (rf, gbdt).
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelChoice>>,
    /// Share of training grid cells held out for GBDT early stopping.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub mls: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: FeatureFlags,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub mls: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Points at or beyond this C2C distance are dropped.
    #[arg(long)]
    pub threshold_mm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "gbdt")]
    pub model: ModelChoice,
    /// MLS cloud the features came from; enables the grid-cell validation carve.
    #[arg(long)]
    pub mls: Option<PathBuf>,
    #[arg(long)]
    pub grid_size: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub mls: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Labels CSV; adds `abs_err_mm` and `residual_mm`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// MLS cloud the features came from (point coordinates define the folds).
    #[arg(long)]
    pub mls: PathBuf,
    /// Per-fold and aggregate report CSV.
    #[arg(long)]
    pub report: PathBuf,
    /// Permutation repeats per fold; 0 skips importance.
    #[arg(long)]
    pub importance_repeats: Option<usize>,
    /// Importance CSV, used when repeats > 0.
    #[arg(long)]
    pub importance_out: Option<PathBuf>,
    #[command(flatten)]
    pub cv: CvFlags,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene TOML (default: the built-in scene).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long = "ref-out")]
    pub ref_out: PathBuf,
    #[arg(long = "mls-out")]
    pub mls_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, requires = "reference")]
    pub mls: Option<PathBuf>,
    #[arg(long = "ref", requires = "mls")]
    pub reference: Option<PathBuf>,
    /// Synthesize the input pair from this scene instead of reading one.
    #[arg(long, conflicts_with = "mls")]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub threshold_mm: Option<f64>,
    #[arg(long)]
    pub importance_repeats: Option<usize>,
    #[command(flatten)]
    pub features: FeatureFlags,
    #[command(flatten)]
    pub cv: CvFlags,
}

impl FeatureFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.features.k_min, self.k_min);
        set(&mut c.features.k_max, self.k_max);
        set(&mut c.features.k_step, self.k_step);
        set(&mut c.features.cell_size, self.cell_size);
    }
}

impl CvFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.cv.folds, self.folds);
        set(&mut c.cv.grid_size_m, self.grid_size);
        set(&mut c.cv.models, self.models.clone());
        set(&mut c.cv.validation_fraction, self.validation_fraction);
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

// ---------------------------------------------------------------- outputs

/// Files written by the running command. Unless [`Outputs::commit`] is
/// called they are removed on drop, so a failed command leaves nothing
/// half-written behind.
#[derive(Debug, Default)]
struct Outputs {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn claim(&mut self, path: &Path) -> PathBuf {
        self.paths.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

// ---------------------------------------------------------------- entry points

/// Parses `args` (including the program name) and runs the command.
/// Returns 0 on success and 1 on any failure, after printing the error.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    set(&mut config.seed, cli.seed);
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    match &cli.command {
        Command::Features(a) => a.flags.apply(&mut config),
        Command::Label(a) => set(&mut config.label.threshold_mm, a.threshold_mm),
        Command::Train(a) => {
            set(&mut config.cv.grid_size_m, a.grid_size);
            set(&mut config.cv.validation_fraction, a.validation_fraction);
        }
        Command::Evaluate(a) => {
            a.cv.apply(&mut config);
            set(&mut config.cv.importance_repeats, a.importance_repeats);
        }
        Command::Pipeline(a) => {
            a.features.apply(&mut config);
            a.cv.apply(&mut config);
            set(&mut config.label.threshold_mm, a.threshold_mm);
            set(&mut config.cv.importance_repeats, a.importance_repeats);
        }
        Command::Predict(_) | Command::Importance(_) | Command::Synth(_) => {}
    }
    config.validate()?;

    let command = &cli.command;
    let work = || match command {
        Command::Features(a) => cmd_features(&a.mls, &a.out, &config),
        Command::Label(a) => cmd_label(&a.mls, &a.reference, &a.out, &config),
        Command::Train(a) => cmd_train(a, &config),
        Command::Predict(a) => {
            cmd_predict(&a.model, &a.features, &a.mls, &a.out, a.labels.as_deref())
        }
        Command::Evaluate(a) => cmd_evaluate(a, &config),
        Command::Importance(a) => cmd_importance(a, &config),
        Command::Synth(a) => cmd_synth(a.scene.as_deref(), &a.ref_out, &a.mls_out, cli.seed),
        Command::Pipeline(a) => cmd_pipeline(a, &config, cli.seed),
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config_error("threads", e.to_string()))?
            .install(work),
        None => work(),
    }
}

// ---------------------------------------------------------------- commands

pub fn cmd_features(mls_path: &Path, out_csv: &Path, config: &RunConfig) -> Result<()> {
    let mut outputs = Outputs::default();
    let t = Instant::now();
    let cloud = read_cloud(mls_path)?;
    let fc = config.feature_config();
    eprintln!(
        "features: {} points, k in [{}, {}] step {}",
        cloud.len(),
        fc.k_range.k_min,
        fc.k_range.k_max,
        fc.k_range.k_step
    );
    let fm = extract_features(&cloud, &fc)?;
    fm.write_csv(outputs.claim(out_csv))?;
    let degenerate = fm.degenerate.iter().filter(|&&d| d).count();
    println!(
        "wrote {} feature rows to {} ({} degenerate or capped) in {:.1} s",
        fm.len(),
        out_csv.display(),
        degenerate,
        t.elapsed().as_secs_f64()
    );
    outputs.commit();
    Ok(())
}

pub fn cmd_label(
    mls_path: &Path,
    ref_path: &Path,
    out_csv: &Path,
    config: &RunConfig,
) -> Result<()> {
    let mut outputs = Outputs::default();
    let mls = read_cloud(mls_path)?;
    let reference = read_cloud(ref_path)?;
    eprintln!(
        "label: {} MLS points against {} reference points",
        mls.len(),
        reference.len()
    );
    let labels = retention_filter(&c2c_label(&mls, &reference)?, config.label.threshold_mm)?;
    labels.write_csv(outputs.claim(out_csv))?;
    let kept = labels.retained_count();
    println!(
        "retained {kept} of {} points with c2c < {} mm ({} dropped); wrote {}",
        labels.len(),
        io::format_real(config.label.threshold_mm),
        labels.len() - kept,
        out_csv.display()
    );
    outputs.commit();
    Ok(())
}

/// Feature rows and labels joined on `idx`, restricted to retained rows.
struct Dataset {
    features: FeatureMatrix,
    y: Vec<f64>,
}

fn load_dataset(features_csv: &Path, labels_csv: &Path) -> Result<Dataset> {
    let features = FeatureMatrix::read_csv(features_csv)?;
    let labels = LabeledCloud::read_csv(labels_csv)?;
    join(features, &labels, features_csv, labels_csv)
}

fn join(
    features: FeatureMatrix,
    labels: &LabeledCloud,
    features_csv: &Path,
    labels_csv: &Path,
) -> Result<Dataset> {
    if features.len() != labels.len() {
        return Err(CliError::Usage(format!(
            "{} has {} rows but {} has {}",
            features_csv.display(),
            features.len(),
            labels_csv.display(),
            labels.len()
        )));
    }
    if let Some(i) = (0..labels.len()).find(|&i| features.indices[i] != labels.indices[i]) {
        return Err(CliError::Usage(format!(
            "row {}: feature idx {} does not match label idx {}",
            i + 1,
            features.indices[i],
            labels.indices[i]
        )));
    }
    let rows = labels.retained_rows();
    if rows.is_empty() {
        return Err(CliError::Usage(format!(
            "{} has no retained rows",
            labels_csv.display()
        )));
    }
    let y = rows.iter().map(|&r| labels.c2c_mm[r]).collect();
    Ok(Dataset {
        features: features.select(&rows),
        y,
    })
}

fn points_for(
    cloud: &PointCloud,
    indices: &[usize],
    path: &Path,
) -> Result<Vec<crate::io::Point3>> {
    indices
        .iter()
        .map(|&i| {
            if i < cloud.len() {
                Ok(cloud.point(i))
            } else {
                Err(CliError::Usage(format!(
                    "feature idx {i} is out of range for {} ({} points)",
                    path.display(),
                    cloud.len()
                )))
            }
        })
        .collect()
}

fn grid_cells(points: &[crate::io::Point3], grid_size: f64) -> Vec<GridCell> {
    points.iter().map(|p| cell_of(p, grid_size)).collect()
}

fn train_one(
    model: ModelChoice,
    data: &Dataset,
    cells: &[GridCell],
    config: &RunConfig,
) -> Result<(ForestModel, usize)> {
    let all: Vec<usize> = (0..data.y.len()).collect();
    // Same derivation as fold 0 of cross-validation.
    let seed = derive_seed_path(config.seed, &[0, model as u64]);
    Ok(fit_model(
        model,
        &data.features.x,
        &data.y,
        &all,
        cells,
        &config.cv_config(),
        seed,
    )?)
}

pub fn cmd_train(args: &TrainArgs, config: &RunConfig) -> Result<()> {
    let mut outputs = Outputs::default();
    let t = Instant::now();
    let data = load_dataset(&args.features, &args.labels)?;
    let cells = match &args.mls {
        Some(path) => {
            let cloud = read_cloud(path)?;
            grid_cells(
                &points_for(&cloud, &data.features.indices, path)?,
                config.cv.grid_size_m,
            )
        }
        None => (0..data.y.len() as i64).map(|i| (i, 0)).collect(),
    };
    if args.model == ModelChoice::Gbdt {
        let share = io::format_real(config.cv.validation_fraction * 100.0);
        if args.mls.is_some() {
            println!(
                "note: holding out {share}% of {} m grid cells for early stopping",
                io::format_real(config.cv.grid_size_m)
            );
        } else {
            println!("note: no --mls given, so {share}% of rows (not grid cells) are held out for early stopping");
        }
    }
    eprintln!("train: {} on {} rows", args.model.label(), data.y.len());
    let (model, n_val) = train_one(args.model, &data, &cells, config)?;
    save_model(&model, outputs.claim(&args.out))?;
    println!(
        "{}: {} trees, {} training rows, {} validation rows, {:.1} s; wrote {}",
        args.model.label(),
        model.active_trees().len(),
        data.y.len() - n_val,
        n_val,
        t.elapsed().as_secs_f64(),
        args.out.display()
    );
    if args.model == ModelChoice::Gbdt {
        println!("best iteration: {}", model.best_iteration);
    }
    outputs.commit();
    Ok(())
}

pub fn cmd_predict(
    model_path: &Path,
    features_csv: &Path,
    mls_path: &Path,
    out_ply: &Path,
    labels_csv: Option<&Path>,
) -> Result<()> {
    let mut outputs = Outputs::default();
    let model = load_model(model_path)?;
    let features = FeatureMatrix::read_csv(features_csv)?;
    let cloud = read_cloud(mls_path)?;
    let points = points_for(&cloud, &features.indices, mls_path)?;
    eprintln!("predict: {} rows", features.len());
    let pred = model.predict(&features.x)?;
    let mut out = cloud.select(&features.indices);
    debug_assert_eq!(out.len(), points.len());
    out.set_scalar("pred_c2c_mm", pred.clone())?;
    if let Some(path) = labels_csv {
        let labels = LabeledCloud::read_csv(path)?;
        let by_index: HashMap<usize, f64> = labels
            .indices
            .iter()
            .copied()
            .zip(labels.c2c_mm.iter().copied())
            .collect();
        let y: Vec<f64> = features
            .indices
            .iter()
            .map(|i| {
                by_index.get(i).copied().ok_or_else(|| {
                    CliError::Usage(format!("{} has no label for idx {i}", path.display()))
                })
            })
            .collect::<Result<_>>()?;
        out.set_scalar(
            "abs_err_mm",
            y.iter().zip(&pred).map(|(y, p)| (y - p).abs()).collect(),
        )?;
        out.set_scalar(
            "residual_mm",
            y.iter().zip(&pred).map(|(y, p)| p - y).collect(),
        )?;
        let rmse = crate::evaluation::rmse(&y, &pred);
        println!("RMSE against labels: {:.3} mm", rmse);
    }
    write_cloud(&out, outputs.claim(out_ply))?;
    println!("wrote {} predictions to {}", pred.len(), out_ply.display());
    outputs.commit();
    Ok(())
}

fn evaluate_into(
    data: &Dataset,
    points: &[crate::io::Point3],
    report_csv: &Path,
    importance_csv: Option<&Path>,
    config: &RunConfig,
    outputs: &mut Outputs,
) -> Result<()> {
    let folds = assign_spatial_folds(points, config.cv.grid_size_m, config.cv.folds, config.seed)?;
    eprintln!(
        "evaluate: {} rows, {} folds over {} grid cells of {} m",
        data.y.len(),
        folds.n_folds,
        folds
            .cells
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        io::format_real(config.cv.grid_size_m)
    );
    let report = cross_validate(&data.features.x, &data.y, &folds, &config.cv_config())?;
    write_report_csv(&report, outputs.claim(report_csv))?;
    println!("{}", render_summary(&report)?);
    println!("wrote {}", report_csv.display());
    if config.cv.importance_repeats > 0 {
        if let Some(path) = importance_csv {
            write_importance_csv(&report.importance, outputs.claim(path))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, config: &RunConfig) -> Result<()> {
    let mut outputs = Outputs::default();
    if config.cv.importance_repeats > 0 && args.importance_out.is_none() {
        return Err(CliError::Usage(
            "--importance-repeats needs --importance-out".into(),
        ));
    }
    let data = load_dataset(&args.features, &args.labels)?;
    let cloud = read_cloud(&args.mls)?;
    let points = points_for(&cloud, &data.features.indices, &args.mls)?;
    evaluate_into(
        &data,
        &points,
        &args.report,
        args.importance_out.as_deref(),
        config,
        &mut outputs,
    )?;
    outputs.commit();
    Ok(())
}

pub fn cmd_importance(args: &ImportanceArgs, config: &RunConfig) -> Result<()> {
    let mut outputs = Outputs::default();
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.features, &args.labels)?;
    model.check_columns(data.features.x.columns())?;
    eprintln!(
        "importance: {} rows, {} repeats",
        data.y.len(),
        args.repeats
    );
    let seed = derive_seed_path(config.seed, &[tags::IMPORTANCE]);
    let delta = permutation_importance(&model, &data.features.x, &data.y, args.repeats, seed)?;
    let rows: Vec<Vec<io::Cell>> = model
        .columns
        .iter()
        .zip(&delta)
        .map(|(c, d)| vec![io::Cell::from(c.as_str()), io::Cell::from(*d)])
        .collect();
    io::write_table(
        &["feature", "delta_rmse_mm"],
        &rows,
        outputs.claim(&args.out),
    )?;
    let mut ranked: Vec<(&String, f64)> = model.columns.iter().zip(delta.iter().copied()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    println!("{:<28} {:>14}", "feature", "ΔRMSE (mm)");
    for (name, d) in ranked.iter().take(10) {
        println!("{name:<28} {d:>14.4}");
    }
    println!("wrote {}", args.out.display());
    outputs.commit();
    Ok(())
}

fn load_scene(scene: Option<&Path>, seed: Option<u64>) -> Result<SceneSpec> {
    let mut spec = match scene {
        Some(path) => SceneSpec::from_file(path)?,
        None => SceneSpec::default_scene(),
    };
    set(&mut spec.scene.seed, seed);
    Ok(spec)
}

pub fn cmd_synth(
    scene: Option<&Path>,
    ref_out: &Path,
    mls_out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let mut outputs = Outputs::default();
    let spec = load_scene(scene, seed)?;
    let pair = generate_pair(&spec)?;
    write_cloud(&pair.reference, outputs.claim(ref_out))?;
    write_cloud(&pair.mls, outputs.claim(mls_out))?;
    println!(
        "scene seed {}: {} reference points to {}, {} MLS points to {}",
        spec.scene.seed,
        pair.reference.len(),
        ref_out.display(),
        pair.mls.len(),
        mls_out.display()
    );
    outputs.commit();
    Ok(())
}

pub fn cmd_pipeline(args: &PipelineArgs, config: &RunConfig, seed: Option<u64>) -> Result<()> {
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut outputs = Outputs::default();
    let (mls_path, ref_path) = match (&args.mls, &args.reference) {
        (Some(m), Some(r)) => (m.clone(), r.clone()),
        _ => {
            let (r, m) = (dir.join("reference.ply"), dir.join("mls.ply"));
            let spec = load_scene(args.scene.as_deref(), seed)?;
            let pair = generate_pair(&spec)?;
            write_cloud(&pair.reference, outputs.claim(&r))?;
            write_cloud(&pair.mls, outputs.claim(&m))?;
            println!(
                "synthesized {} reference and {} MLS points",
                pair.reference.len(),
                pair.mls.len()
            );
            (m, r)
        }
    };
    let cloud = read_cloud(&mls_path)?;
    let reference = read_cloud(&ref_path)?;

    let t = Instant::now();
    let features = extract_features(&cloud, &config.feature_config())?;
    let features_csv = dir.join("features.csv");
    features.write_csv(outputs.claim(&features_csv))?;
    println!(
        "features: {} rows in {:.1} s",
        features.len(),
        t.elapsed().as_secs_f64()
    );

    let labels = retention_filter(&c2c_label(&cloud, &reference)?, config.label.threshold_mm)?;
    let labels_csv = dir.join("labels.csv");
    labels.write_csv(outputs.claim(&labels_csv))?;
    println!(
        "labels: retained {} of {}",
        labels.retained_count(),
        labels.len()
    );

    let data = join(features, &labels, &features_csv, &labels_csv)?;
    let points = points_for(&cloud, &data.features.indices, &mls_path)?;
    evaluate_into(
        &data,
        &points,
        &dir.join("report.csv"),
        Some(&dir.join("importance.csv")),
        config,
        &mut outputs,
    )?;

    let cells = grid_cells(&points, config.cv.grid_size_m);
    for &model in &config.cv.models {
        let (fitted, _) = train_one(model, &data, &cells, config)?;
        let model_path = dir.join(format!("model_{}.json", model.name()));
        save_model(&fitted, outputs.claim(&model_path))?;
        let pred = fitted.predict(&data.features.x)?;
        let mut out = cloud.select(&data.features.indices);
        out.set_scalar("pred_c2c_mm", pred.clone())?;
        out.set_scalar(
            "abs_err_mm",
            data.y
                .iter()
                .zip(&pred)
                .map(|(y, p)| (y - p).abs())
                .collect(),
        )?;
        out.set_scalar(
            "residual_mm",
            data.y.iter().zip(&pred).map(|(y, p)| p - y).collect(),
        )?;
        let ply = dir.join(format!("predicted_{}.ply", model.name()));
        write_cloud(&out, outputs.claim(&ply))?;
        println!(
            "{}: wrote {} and {}",
            model.label(),
            model_path.display(),
            ply.display()
        );
    }
    outputs.commit();
    Ok(())
}
