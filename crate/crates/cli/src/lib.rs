//! Command-line front end: config resolution, the stage pipeline, the run
//! manifest and exit-code mapping.

pub mod config;
pub mod manifest;
pub mod stages;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use shapvic::{Error, ErrorClass};

use crate::config::{Overrides, RunConfig};
use crate::manifest::{Manifest, StageRecord, StageStatus};
use crate::stages::{Stage, MANIFEST_JSON};

/// An error tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl StageError {
    fn new(stage: &str, source: Error) -> Self {
        Self {
            stage: stage.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.source.class())
    }
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

/// Runs `f` on a pool of `workers` threads, or the global pool if `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Full pipeline: fit, sample, explain the optimal model, importance,
/// pool, rank and report. Writes `manifest.json` even when a stage fails,
/// with `partial` set.
pub fn cmd_run(cfg: &RunConfig) -> Result<PathBuf, StageError> {
    cfg.validate().map_err(|e| StageError::new("config", e))?;
    let data = cfg.data_path().map_err(|e| StageError::new("config", e))?.to_path_buf();
    std::fs::create_dir_all(&cfg.out).map_err(|e| StageError::new("config", Error::io(&cfg.out, e)))?;
    let mut manifest = Manifest::new(cfg);
    manifest
        .record_input("data", &data)
        .map_err(|e| StageError::new("fit", e))?;

    let mut failure = None;
    for stage in Stage::PIPELINE {
        if failure.is_some() {
            manifest.stages.push(StageRecord {
                name: stage.name().into(),
                status: StageStatus::Skipped,
                error: None,
            });
            continue;
        }
        match with_workers(cfg.workers, || stage.run(cfg)).and_then(|r| r) {
            Ok(()) => manifest.stages.push(StageRecord {
                name: stage.name().into(),
                status: StageStatus::Ok,
                error: None,
            }),
            Err(e) => {
                manifest.stages.push(StageRecord {
                    name: stage.name().into(),
                    status: StageStatus::Failed,
                    error: Some(e.to_string()),
                });
                failure = Some(StageError::new(stage.name(), e));
            }
        }
    }
    manifest.partial = failure.is_some();
    let all: Vec<&str> = Stage::PIPELINE.iter().flat_map(|s| s.artifacts().iter().copied()).collect();
    manifest
        .record_artifacts(&cfg.out, &all)
        .and_then(|_| manifest.write(&cfg.out.join(MANIFEST_JSON)))
        .map_err(|e| StageError::new("manifest", e))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(cfg.out.clone()),
    }
}

/// Artifacts a complete run must list in its manifest.
pub fn run_artifacts() -> Vec<&'static str> {
    Stage::PIPELINE.iter().flat_map(|s| s.artifacts().iter().copied()).collect()
}

/// Runs one stage on its own.
pub fn cmd_stage(stage: Stage, cfg: &RunConfig) -> Result<(), StageError> {
    cfg.validate().map_err(|e| StageError::new("config", e))?;
    with_workers(cfg.workers, || stage.run(cfg))
        .and_then(|r| r)
        .map_err(|e| StageError::new(stage.name(), e))
}

/// Writes the synthetic benchmark dataset to `path`.
pub fn cmd_simulate(rows: usize, seed: u64, path: &Path) -> Result<(), StageError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| StageError::new("simulate", Error::io(dir, e)))?;
    }
    shapvic::synthetic::benchmark(rows, seed)
        .write_csv(path, shapvic::synthetic::BENCHMARK_OUTCOME)
        .map_err(|e| StageError::new("simulate", e))
}

#[derive(Debug, Parser)]
#[command(name = "shapvic", version, about = "Shapley variable importance clouds for logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// Flat JSON config; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV with a header row.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Name of the 0/1 outcome column.
    #[arg(long, global = true)]
    outcome: Option<String>,
    /// Share of rows used for training; the rest is held out for evaluation.
    #[arg(long, global = true)]
    train_fraction: Option<f64>,
    /// Rashomon tolerance: keep models with loss <= (1 + epsilon) * optimum.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Number of near-optimal models to keep.
    #[arg(long, global = true)]
    models: Option<usize>,
    /// Permutations per Shapley estimate.
    #[arg(long, global = true)]
    permutations: Option<usize>,
    /// Violin slices per variable.
    #[arg(long, global = true)]
    slices: Option<usize>,
    /// Significance level of the pairwise ranking tests.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Master seed; every stage seed derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (wall time only; output is identical).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write a manifest.
    Run,
    /// Fit the optimal logistic model (model.json).
    Fit,
    /// Sample near-optimal models (models.csv).
    Sample,
    /// SHAP summary of the optimal model (shap_summary.csv/.svg).
    ExplainOptimal,
    /// Shapley importance per model (importance.csv, reliance.csv).
    Importance,
    /// Random-effects pooling across models (pooled.csv).
    Pool,
    /// Within-model ranks and rank frequencies (rank_frequency.csv, model_ranks.csv).
    Rank {
        /// Print ids of models ranking this variable within --max-rank.
        #[arg(long, requires = "max_rank")]
        variable: Option<String>,
        #[arg(long, requires = "variable")]
        max_rank: Option<usize>,
    },
    /// Bar and violin charts (bar.svg, violin.svg and CSV side-cars).
    Report,
    /// Permutation model reliance per model (vic_permutation.csv, vic_pooled.csv).
    VicPermutation,
    /// Write the synthetic benchmark dataset to <out>/synthetic.csv.
    Simulate {
        #[arg(long, default_value_t = 2000)]
        rows: usize,
    },
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            data: self.data.clone(),
            outcome: self.outcome.clone(),
            train_fraction: self.train_fraction,
            epsilon: self.epsilon,
            models: self.models,
            permutations: self.permutations,
            slices: self.slices,
            alpha: self.alpha,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match RunConfig::resolve(cli.flags.config.as_deref(), &cli.flags.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(e.class());
        }
    };
    let result = match cli.command {
        Command::Run => cmd_run(&cfg).map(|dir| println!("{}", dir.display())),
        Command::Fit => cmd_stage(Stage::Fit, &cfg),
        Command::Sample => cmd_stage(Stage::Sample, &cfg),
        Command::ExplainOptimal => cmd_stage(Stage::ExplainOptimal, &cfg),
        Command::Importance => cmd_stage(Stage::Importance, &cfg),
        Command::Pool => cmd_stage(Stage::Pool, &cfg),
        Command::Rank { variable, max_rank } => cmd_stage(Stage::Rank, &cfg).and_then(|_| match (variable, max_rank) {
            (Some(v), Some(k)) => stages::rank_filter(&cfg, &v, k)
                .map(|ids| {
                    for id in ids {
                        println!("{id}");
                    }
                })
                .map_err(|e| StageError::new("rank", e)),
            _ => Ok(()),
        }),
        Command::Report => cmd_stage(Stage::Report, &cfg),
        Command::VicPermutation => cmd_stage(Stage::VicPermutation, &cfg),
        Command::Simulate { rows } => cmd_simulate(rows, cfg.seed, &cfg.out.join("synthetic.csv")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
