use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shapvic::data::SplitSpec;
use shapvic::numeric::stage_seed;
use shapvic::rashomon::SamplerConfig;
use shapvic::shapley::ShapleyConfig;
use shapvic::{Error, Result};

/// Every knob of a run in one flat JSON object. Command-line flags
/// override the matching keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub outcome: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub fit_tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub m0: usize,
    pub u1: f64,
    pub u2: f64,
    pub target_min: usize,
    pub target_max: usize,
    pub n_models: usize,
    pub coverage_bins: usize,
    pub max_rounds: usize,
    pub n_permutations: usize,
    pub background_rows: usize,
    pub max_instances: usize,
    pub vic_permutations: usize,
    pub n_slices: usize,
    pub alpha: f64,
    pub out: PathBuf,
    /// Thread count; affects wall time only and is left out of the manifest.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SamplerConfig::default();
        let sh = ShapleyConfig::default();
        Self {
            data: None,
            outcome: "outcome".into(),
            train_fraction: 0.9,
            seed: 0,
            fit_tol: shapvic::glm::DEFAULT_TOL,
            max_iter: shapvic::glm::DEFAULT_MAX_ITER,
            epsilon: s.epsilon,
            m0: s.m0,
            u1: s.u1,
            u2: s.u2,
            target_min: s.target_min,
            target_max: s.target_max,
            n_models: s.n_models,
            coverage_bins: s.coverage_bins,
            max_rounds: s.max_rounds,
            n_permutations: sh.n_permutations,
            background_rows: sh.background_rows,
            max_instances: sh.max_instances,
            vic_permutations: 10,
            n_slices: shapvic::report::DEFAULT_SLICES,
            alpha: 0.05,
            out: PathBuf::from("shapvic-out"),
            workers: None,
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub outcome: Option<String>,
    pub train_fraction: Option<f64>,
    pub epsilon: Option<f64>,
    pub models: Option<usize>,
    pub permutations: Option<usize>,
    pub slices: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads `config` (if any) over the defaults, then applies flags.
    pub fn resolve(config: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match config {
            Some(p) => Self::from_json_file(p)?,
            None => Self::default(),
        };
        cfg.apply(flags);
        Ok(cfg)
    }

    pub fn apply(&mut self, f: &Overrides) {
        if let Some(v) = &f.data {
            self.data = Some(v.clone());
        }
        if let Some(v) = &f.outcome {
            self.outcome = v.clone();
        }
        if let Some(v) = f.train_fraction {
            self.train_fraction = v;
        }
        if let Some(v) = f.epsilon {
            self.epsilon = v;
        }
        if let Some(n) = f.models {
            // widen the accepted range so a smaller or larger request stays valid
            self.n_models = n;
            self.target_min = self.target_min.min(n);
            self.target_max = self.target_max.max(n);
        }
        if let Some(v) = f.permutations {
            self.n_permutations = v;
        }
        if let Some(v) = f.slices {
            self.n_slices = v;
        }
        if let Some(v) = f.alpha {
            self.alpha = v;
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.workers {
            self.workers = Some(v);
        }
        if let Some(v) = &f.out {
            self.out = v.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler().validate()?;
        self.shapley("importance").validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n_slices == 0 {
            return Err(Error::Config("n_slices must be at least 1".into()));
        }
        if self.vic_permutations < 2 {
            return Err(Error::Config("vic_permutations must be at least 2".into()));
        }
        if !(self.fit_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("fit_tol and max_iter must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("no input data given (use --data or the `data` key)".into()))
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: stage_seed(self.seed, "split"),
        }
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            epsilon: self.epsilon,
            m0: self.m0,
            u1: self.u1,
            u2: self.u2,
            target_min: self.target_min,
            target_max: self.target_max,
            n_models: self.n_models,
            coverage_bins: self.coverage_bins,
            max_rounds: self.max_rounds,
            seed: stage_seed(self.seed, "sample"),
        }
    }

    pub fn shapley(&self, stage: &str) -> ShapleyConfig {
        ShapleyConfig {
            n_permutations: self.n_permutations,
            background_rows: self.background_rows,
            max_instances: self.max_instances,
            seed: stage_seed(self.seed, stage),
        }
    }
}
