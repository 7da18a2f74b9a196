//! Pipeline stages. Each reads its inputs from files in the output
//! directory, so running `run` and running the stages one by one produce
//! the same bytes.

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use shapvic::data::{load_csv, split, Dataset};
use shapvic::glm::{fit_logistic, FittedModel};
use shapvic::io;
use shapvic::numeric::{mix_seed, stage_seed};
use shapvic::pooling::pool_all;
use shapvic::ranking::{filter_models_by_rank, rank_frequency, rank_variables};
use shapvic::rashomon::{loss_bound, sample_rashomon, ModelSample};
use shapvic::reliance::{compute_shapley_vic, compute_vic_permutation};
use shapvic::report::{self, BarDatum, ViolinSummary};
use shapvic::shapley::{mean_abs_shap, ShapleyConfig};
use shapvic::{Error, Result};

use crate::config::RunConfig;

pub const MODEL_JSON: &str = "model.json";
pub const MODELS_CSV: &str = "models.csv";
pub const SHAP_SUMMARY_CSV: &str = "shap_summary.csv";
pub const SHAP_SUMMARY_SVG: &str = "shap_summary.svg";
pub const IMPORTANCE_CSV: &str = "importance.csv";
pub const RELIANCE_CSV: &str = "reliance.csv";
pub const POOLED_CSV: &str = "pooled.csv";
pub const RANK_FREQUENCY_CSV: &str = "rank_frequency.csv";
pub const MODEL_RANKS_CSV: &str = "model_ranks.csv";
pub const BAR_SVG: &str = "bar.svg";
pub const BAR_CSV: &str = "bar.csv";
pub const VIOLIN_SVG: &str = "violin.svg";
pub const VIOLIN_CSV: &str = "violin.csv";
pub const VIC_PERMUTATION_CSV: &str = "vic_permutation.csv";
pub const VIC_POOLED_CSV: &str = "vic_pooled.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Fit,
    Sample,
    ExplainOptimal,
    Importance,
    Pool,
    Rank,
    Report,
    VicPermutation,
}

impl Stage {
    /// Stages of a full run, in order.
    pub const PIPELINE: [Stage; 7] = [
        Stage::Fit,
        Stage::Sample,
        Stage::ExplainOptimal,
        Stage::Importance,
        Stage::Pool,
        Stage::Rank,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Fit => "fit",
            Stage::Sample => "sample",
            Stage::ExplainOptimal => "explain-optimal",
            Stage::Importance => "importance",
            Stage::Pool => "pool",
            Stage::Rank => "rank",
            Stage::Report => "report",
            Stage::VicPermutation => "vic-permutation",
        }
    }

    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Stage::Fit => &[MODEL_JSON],
            Stage::Sample => &[MODELS_CSV],
            Stage::ExplainOptimal => &[SHAP_SUMMARY_CSV, SHAP_SUMMARY_SVG],
            Stage::Importance => &[IMPORTANCE_CSV, RELIANCE_CSV],
            Stage::Pool => &[POOLED_CSV],
            Stage::Rank => &[RANK_FREQUENCY_CSV, MODEL_RANKS_CSV],
            Stage::Report => &[BAR_SVG, BAR_CSV, VIOLIN_SVG, VIOLIN_CSV],
            Stage::VicPermutation => &[VIC_PERMUTATION_CSV, VIC_POOLED_CSV],
        }
    }

    pub fn run(self, cfg: &RunConfig) -> Result<()> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
        info!("stage {}", self.name());
        match self {
            Stage::Fit => fit(cfg),
            Stage::Sample => sample(cfg),
            Stage::ExplainOptimal => explain_optimal(cfg),
            Stage::Importance => importance(cfg),
            Stage::Pool => pool(cfg),
            Stage::Rank => rank(cfg),
            Stage::Report => report(cfg),
            Stage::VicPermutation => vic_permutation(cfg),
        }
    }
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

/// Train and evaluation (test) parts of the input data.
pub fn load_split(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let data = load_csv(cfg.data_path()?, &cfg.outcome)?;
    split(&data, &cfg.split_spec())
}

pub fn read_model(path: &Path) -> Result<FittedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FittedModel::from_json(&text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn check_names(model: &FittedModel, data: &Dataset) -> Result<()> {
    if model.variable_names != data.variable_names() {
        return Err(Error::Validation(format!(
            "model variables [{}] differ from data columns [{}]",
            model.variable_names.join(", "),
            data.variable_names().join(", ")
        )));
    }
    Ok(())
}

fn fit(cfg: &RunConfig) -> Result<()> {
    let (train, _) = load_split(cfg)?;
    let model = fit_logistic(&train, cfg.fit_tol, cfg.max_iter)?;
    info!("optimal training loss {}", model.train_loss);
    write_text(&out(cfg, MODEL_JSON), &model.to_json()?)
}

fn sample(cfg: &RunConfig) -> Result<()> {
    let (train, _) = load_split(cfg)?;
    let model = read_model(&out(cfg, MODEL_JSON))?;
    check_names(&model, &train)?;
    let rs = sample_rashomon(&model, &train, &cfg.sampler())?;
    info!(
        "{} models kept from {} accepted of {} drawn in {} round(s)",
        rs.models.len(),
        rs.diagnostics.accepted,
        rs.diagnostics.drawn,
        rs.diagnostics.rounds
    );
    io::write_models(out(cfg, MODELS_CSV), &rs.models)
}

fn explain_optimal(cfg: &RunConfig) -> Result<()> {
    let (_, test) = load_split(cfg)?;
    let model = read_model(&out(cfg, MODEL_JSON))?;
    check_names(&model, &test)?;
    let shap = mean_abs_shap(&model.beta, &test, &cfg.shapley(Stage::ExplainOptimal.name()))?;
    let names = test.variable_names();
    let features: Vec<Vec<f64>> = shap.instances.iter().map(|&i| test.row(i).to_vec()).collect();
    let points = report::shap_long_format(names, &shap.instances, &shap.values, &features)?;
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| shap.mean_abs[b].total_cmp(&shap.mean_abs[a]).then(a.cmp(&b)));
    let order: Vec<String> = order.into_iter().map(|j| names[j].clone()).collect();
    io::write_shap_summary_csv(out(cfg, SHAP_SUMMARY_CSV), &points)?;
    write_text(&out(cfg, SHAP_SUMMARY_SVG), &report::shap_strip_svg(&points, &order)?)
}

fn per_model_config(base: &ShapleyConfig, model_id: usize) -> ShapleyConfig {
    ShapleyConfig {
        seed: mix_seed(base.seed, &[model_id as u64]),
        ..base.clone()
    }
}

fn importance(cfg: &RunConfig) -> Result<()> {
    let (_, test) = load_split(cfg)?;
    let model = read_model(&out(cfg, MODEL_JSON))?;
    check_names(&model, &test)?;
    let models = io::read_models(out(cfg, MODELS_CSV), model.n_vars())?;
    let base = cfg.shapley(Stage::Importance.name());
    let results = models
        .par_iter()
        .enumerate()
        .map(|(id, m)| compute_shapley_vic(id, m, &model.vif, &test, &per_model_config(&base, id)))
        .collect::<Result<Vec<_>>>()?;
    let (estimates, reliances): (Vec<_>, Vec<_>) = results
        .into_iter()
        .enumerate()
        .map(|(id, (e, r))| ((id, e), r))
        .unzip();
    io::write_importance(out(cfg, IMPORTANCE_CSV), &model.variable_names, &estimates)?;
    io::write_reliance(out(cfg, RELIANCE_CSV), &model.variable_names, &reliances)
}

fn pool(cfg: &RunConfig) -> Result<()> {
    let model = read_model(&out(cfg, MODEL_JSON))?;
    let reliances = io::read_reliance(out(cfg, RELIANCE_CSV), &model.variable_names)?;
    let pooled = pool_all(&reliances, &model.variable_names)?;
    io::write_pooled(out(cfg, POOLED_CSV), &pooled)
}

fn pooled_order(model: &FittedModel, pooled: &[shapvic::pooling::PooledImportance]) -> Result<Vec<usize>> {
    pooled
        .iter()
        .map(|p| {
            model
                .variable_names
                .iter()
                .position(|v| *v == p.variable)
                .ok_or_else(|| Error::Validation(format!("pooled variable `{}` is not in the model", p.variable)))
        })
        .collect()
}

fn rank(cfg: &RunConfig) -> Result<()> {
    let model = read_model(&out(cfg, MODEL_JSON))?;
    let reliances = io::read_reliance(out(cfg, RELIANCE_CSV), &model.variable_names)?;
    let pooled = io::read_pooled(out(cfg, POOLED_CSV))?;
    let order = pooled_order(&model, &pooled)?;
    let rankings = reliances
        .iter()
        .map(|r| rank_variables(r, cfg.alpha))
        .collect::<Result<Vec<_>>>()?;
    let freq = rank_frequency(&rankings, &model.variable_names, Some(&order))?;
    io::write_rank_frequency(out(cfg, RANK_FREQUENCY_CSV), &freq)?;
    io::write_model_ranks(out(cfg, MODEL_RANKS_CSV), &model.variable_names, &rankings)
}

/// Ids of models ranking `variable` at `max_rank` or better, read from the
/// rank stage's per-model ranks.
pub fn rank_filter(cfg: &RunConfig, variable: &str, max_rank: usize) -> Result<Vec<usize>> {
    let model = read_model(&out(cfg, MODEL_JSON))?;
    let rankings = io::read_model_ranks(out(cfg, MODEL_RANKS_CSV), &model.variable_names)?;
    filter_models_by_rank(&rankings, &model.variable_names, variable, max_rank)
}

fn report(cfg: &RunConfig) -> Result<()> {
    let model = read_model(&out(cfg, MODEL_JSON))?;
    let reliances = io::read_reliance(out(cfg, RELIANCE_CSV), &model.variable_names)?;
    let pooled = io::read_pooled(out(cfg, POOLED_CSV))?;
    let order = pooled_order(&model, &pooled)?;

    let bars: Vec<BarDatum> = pooled.iter().map(BarDatum::from).collect();
    io::write_bar_csv(out(cfg, BAR_CSV), &bars)?;
    report::render_bar_svg(&bars, out(cfg, BAR_SVG))?;

    let losses: Vec<f64> = reliances.iter().map(|r| r.empirical_loss).collect();
    let violins = order
        .iter()
        .map(|&j| {
            let values: Vec<f64> = reliances.iter().map(|r| r.values[j]).collect();
            report::build_violin(&model.variable_names[j], &values, &losses, cfg.n_slices)
        })
        .collect::<Result<Vec<ViolinSummary>>>()?;
    let range = (model.train_loss, loss_bound(&model, cfg.epsilon));
    io::write_violin_csv(out(cfg, VIOLIN_CSV), &violins)?;
    report::render_violin_svg(&violins, range, out(cfg, VIOLIN_SVG))
}

fn vic_permutation(cfg: &RunConfig) -> Result<()> {
    let (_, test) = load_split(cfg)?;
    let model = read_model(&out(cfg, MODEL_JSON))?;
    check_names(&model, &test)?;
    let models: Vec<ModelSample> = io::read_models(out(cfg, MODELS_CSV), model.n_vars())?;
    let seed = stage_seed(cfg.seed, Stage::VicPermutation.name());
    let rel = models
        .par_iter()
        .enumerate()
        .map(|(id, m)| compute_vic_permutation(id, m, &test, cfg.vic_permutations, mix_seed(seed, &[id as u64])))
        .collect::<Result<Vec<_>>>()?;
    io::write_vic_permutation(out(cfg, VIC_PERMUTATION_CSV), &model.variable_names, &rel)?;
    let as_reliance: Vec<shapvic::reliance::ModelReliance> = rel
        .iter()
        .zip(&models)
        .map(|(r, m)| shapvic::reliance::ModelReliance {
            model_id: r.model_id,
            values: r.values_minus_one.clone(),
            se: r.se.clone(),
            vif_gated: vec![false; r.se.len()],
            empirical_loss: m.empirical_loss,
        })
        .collect();
    let pooled = pool_all(&as_reliance, &model.variable_names)?;
    io::write_pooled(out(cfg, VIC_POOLED_CSV), &pooled)
}
