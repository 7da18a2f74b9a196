//! Shapley values of cooperative games over the model's variables.
//!
//! Two value functions are provided for a logistic model under marginal
//! imputation (absent variables are filled in from background rows):
//!
//! * [`ValueFunctionKind::GlobalSage`]: loss reduction over the
//!   mean-prediction baseline, averaged over evaluation rows (SAGE).
//! * [`ValueFunctionKind::LocalShap`]: expected prediction for one instance
//!   with the coalition's coordinates fixed (SHAP).
//!
//! Attribution is either exact (all `2^d` coalitions) or estimated from
//! uniformly sampled permutations with CLT standard errors. Coalition values
//! are memoised per game, so the sampled estimator never evaluates a
//! coalition twice.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::clipped_log_loss;
use crate::numeric::{compensated_mean, mix_seed, sample_sd, sigmoid, stream_rng, NeumaierSum};

/// Largest `d` accepted by exact enumeration.
pub const MAX_EXACT_PLAYERS: usize = 15;

const PERMUTATION_STREAM: u64 = 0x5045_524d;
const BACKGROUND_STREAM: u64 = 0x4247;
const INSTANCE_STREAM: u64 = 0x494e_5354;

/// Bit set of player indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(u64);

impl Subset {
    pub fn empty() -> Self {
        Subset(0)
    }

    pub fn full(d: usize) -> Self {
        if d == 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << d) - 1)
        }
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Subset(indices.iter().fold(0, |acc, &j| acc | (1u64 << j)))
    }

    pub fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, j: usize) -> bool {
        self.0 & (1u64 << j) != 0
    }

    pub fn with(self, j: usize) -> Self {
        Subset(self.0 | (1u64 << j))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// A cooperative game with a deterministic value function.
pub trait Game: Sync {
    fn n_players(&self) -> usize;
    fn value(&self, subset: Subset) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueFunctionKind {
    GlobalSage,
    LocalShap(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// Zero for exact enumeration.
    pub n_permutations: usize,
    pub value_empty: f64,
    pub value_full: f64,
}

impl ShapleyEstimate {
    pub fn is_exact(&self) -> bool {
        self.n_permutations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapleyConfig {
    pub n_permutations: usize,
    pub background_rows: usize,
    /// Instance cap for mean-absolute-SHAP summaries.
    pub max_instances: usize,
    pub seed: u64,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self {
            n_permutations: 256,
            background_rows: 512,
            max_instances: 1000,
            seed: 0,
        }
    }
}

impl ShapleyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_permutations < 2 {
            return Err(Error::Config(format!(
                "at least 2 permutations are needed for a standard error, got {}",
                self.n_permutations
            )));
        }
        if self.background_rows == 0 || self.max_instances == 0 {
            return Err(Error::Config("background_rows and max_instances must be positive".into()));
        }
        Ok(())
    }
}

/// Logistic model explained under marginal imputation. Per-variable linear
/// terms `beta_j x_j` are precomputed for evaluation and background rows.
pub struct LogisticGame {
    d: usize,
    intercept: f64,
    background: Vec<f64>,
    target: Target,
}

enum Target {
    Loss {
        eval_terms: Vec<f64>,
        outcome: Vec<f64>,
        baseline_loss: f64,
    },
    Instance {
        terms: Vec<f64>,
    },
}

fn terms_of(beta: &[f64], data: &Dataset, rows: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut out = Vec::new();
    for i in rows {
        out.extend(data.row(i).iter().zip(&beta[1..]).map(|(x, b)| b * x));
    }
    out
}

#[inline]
fn partial_sum(terms: &[f64], subset: Subset, inside: bool) -> f64 {
    let mut acc = 0.0;
    for (j, t) in terms.iter().enumerate() {
        if subset.contains(j) == inside {
            acc += t;
        }
    }
    acc
}

impl LogisticGame {
    pub fn new(
        beta: &[f64],
        eval_data: &Dataset,
        background_rows: &[usize],
        kind: ValueFunctionKind,
    ) -> Result<Self> {
        let d = eval_data.n_vars();
        if beta.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                actual: beta.len(),
            });
        }
        if eval_data.n_rows() == 0 {
            return Err(Error::Validation("evaluation data is empty".into()));
        }
        if d > 64 {
            return Err(Error::Config(format!("at most 64 variables are supported, got {d}")));
        }
        if background_rows.is_empty() {
            return Err(Error::Validation("background is empty".into()));
        }
        let background = terms_of(beta, eval_data, background_rows.iter().copied());
        let target = match kind {
            ValueFunctionKind::GlobalSage => Target::Loss {
                eval_terms: terms_of(beta, eval_data, 0..eval_data.n_rows()),
                outcome: eval_data.outcome().to_vec(),
                baseline_loss: 0.0,
            },
            ValueFunctionKind::LocalShap(i) => {
                if i >= eval_data.n_rows() {
                    return Err(Error::Validation(format!(
                        "instance {i} out of range for {} evaluation rows",
                        eval_data.n_rows()
                    )));
                }
                Target::Instance {
                    terms: terms_of(beta, eval_data, std::iter::once(i)),
                }
            }
        };
        let mut game = LogisticGame {
            d,
            intercept: beta[0],
            background,
            target,
        };
        if let Target::Loss { .. } = game.target {
            let base = game.restricted_loss(Subset::empty());
            if let Target::Loss { baseline_loss, .. } = &mut game.target {
                *baseline_loss = base;
            }
        }
        Ok(game)
    }

    /// Distinct background offsets `sum_{j not in S} beta_j x_bj` with
    /// their multiplicities, sorted by value.
    fn background_offsets(&self, subset: Subset) -> Vec<(f64, usize)> {
        let mut offsets: Vec<f64> = self
            .background
            .chunks_exact(self.d)
            .map(|t| partial_sum(t, subset, false))
            .collect();
        offsets.sort_unstable_by(f64::total_cmp);
        let mut grouped: Vec<(f64, usize)> = Vec::with_capacity(offsets.len());
        for c in offsets {
            match grouped.last_mut() {
                Some((v, n)) if v.to_bits() == c.to_bits() => *n += 1,
                _ => grouped.push((c, 1)),
            }
        }
        grouped
    }

    fn n_background(&self) -> usize {
        self.background.len() / self.d
    }

    /// Mean prediction with the linear predictor's present part fixed at
    /// `fixed` and absent coordinates drawn from the background.
    #[inline]
    fn imputed_prediction(&self, fixed: f64, offsets: &[(f64, usize)], full: bool) -> f64 {
        let z = self.intercept + fixed;
        if full {
            return sigmoid(z);
        }
        let mut acc = NeumaierSum::new();
        for &(c, count) in offsets {
            acc.add(sigmoid(z + c) * count as f64);
        }
        acc.total() / self.n_background() as f64
    }

    fn restricted_loss(&self, subset: Subset) -> f64 {
        let Target::Loss {
            eval_terms,
            outcome,
            ..
        } = &self.target
        else {
            unreachable!("restricted_loss on a local game")
        };
        let full = subset == Subset::full(self.d);
        let offsets = if full { Vec::new() } else { self.background_offsets(subset) };
        let fixed: Vec<f64> = eval_terms
            .chunks_exact(self.d)
            .map(|t| partial_sum(t, subset, true))
            .collect();
        // evaluate each distinct fixed part once
        let mut distinct = fixed.clone();
        distinct.sort_unstable_by(f64::total_cmp);
        distinct.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let preds: Vec<f64> = distinct
            .iter()
            .map(|&a| self.imputed_prediction(a, &offsets, full))
            .collect();
        let mut acc = NeumaierSum::new();
        for (a, &y) in fixed.iter().zip(outcome) {
            let k = distinct
                .binary_search_by(|probe| probe.total_cmp(a))
                .expect("fixed part present in distinct set");
            acc.add(clipped_log_loss(preds[k], y));
        }
        acc.total() / outcome.len() as f64
    }
}

impl Game for LogisticGame {
    fn n_players(&self) -> usize {
        self.d
    }

    fn value(&self, subset: Subset) -> f64 {
        match &self.target {
            Target::Loss { baseline_loss, .. } => baseline_loss - self.restricted_loss(subset),
            Target::Instance { terms } => {
                let full = subset == Subset::full(self.d);
                let offsets = if full { Vec::new() } else { self.background_offsets(subset) };
                self.imputed_prediction(partial_sum(terms, subset, true), &offsets, full)
            }
        }
    }
}

/// All evaluation rows, or a seeded sample of `cap` of them in ascending order.
pub fn background_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = stream_rng(seed, &[BACKGROUND_STREAM]);
    let mut idx = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    idx
}

/// Value of one coalition with every evaluation row as background.
pub fn value_of_subset(
    beta: &[f64],
    eval_data: &Dataset,
    subset: &[usize],
    kind: ValueFunctionKind,
) -> Result<f64> {
    let d = eval_data.n_vars();
    if let Some(&j) = subset.iter().find(|&&j| j >= d) {
        return Err(Error::Validation(format!("variable index {j} out of range for d = {d}")));
    }
    let all: Vec<usize> = (0..eval_data.n_rows()).collect();
    let game = LogisticGame::new(beta, eval_data, &all, kind)?;
    Ok(game.value(Subset::from_indices(subset)))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact Shapley values by enumerating every coalition.
pub fn exact_shapley<G: Game + ?Sized>(game: &G) -> Result<ShapleyEstimate> {
    let d = game.n_players();
    if d > MAX_EXACT_PLAYERS {
        return Err(Error::Config(format!(
            "exact enumeration is limited to {MAX_EXACT_PLAYERS} variables (got {d}); use permutation sampling"
        )));
    }
    let n_subsets = 1usize << d;
    let values: Vec<f64> = (0..n_subsets as u64)
        .into_par_iter()
        .map(|bits| game.value(Subset::from_bits(bits)))
        .collect();
    let weights: Vec<f64> = (0..d).map(|s| 1.0 / (d as f64 * binomial(d - 1, s))).collect();
    let phi = (0..d)
        .map(|j| {
            let mut acc = NeumaierSum::new();
            for bits in 0..n_subsets as u64 {
                let s = Subset::from_bits(bits);
                if !s.contains(j) {
                    let with = s.with(j).bits() as usize;
                    acc.add(weights[s.len()] * (values[with] - values[bits as usize]));
                }
            }
            acc.total()
        })
        .collect();
    Ok(ShapleyEstimate {
        values: phi,
        se: vec![0.0; d],
        n_permutations: 0,
        value_empty: values[0],
        value_full: values[n_subsets - 1],
    })
}

/// Permutation-sampling estimate. Permutation `p` is drawn from its own
/// stream keyed by `(seed, p)`; `se_j` is the sample standard deviation of
/// variable `j`'s marginal contributions over `sqrt(n_permutations)`.
pub fn sampled_shapley<G: Game + ?Sized>(game: &G, n_permutations: usize, seed: u64) -> Result<ShapleyEstimate> {
    if n_permutations < 2 {
        return Err(Error::Config(format!(
            "at least 2 permutations are needed for a standard error, got {n_permutations}"
        )));
    }
    let d = game.n_players();
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut value = |s: Subset| *memo.entry(s.bits()).or_insert_with(|| game.value(s));

    let value_empty = value(Subset::empty());
    let mut contributions = vec![Vec::with_capacity(n_permutations); d];
    let mut order: Vec<usize> = (0..d).collect();
    for p in 0..n_permutations {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(seed, &[PERMUTATION_STREAM, p as u64]));
        let mut s = Subset::empty();
        let mut prev = value_empty;
        for &j in &order {
            s = s.with(j);
            let v = value(s);
            contributions[j].push(v - prev);
            prev = v;
        }
    }
    let value_full = value(Subset::full(d));
    let scale = (n_permutations as f64).sqrt();
    Ok(ShapleyEstimate {
        values: contributions.iter().map(|c| compensated_mean(c)).collect(),
        se: contributions.iter().map(|c| sample_sd(c) / scale).collect(),
        n_permutations,
        value_empty,
        value_full,
    })
}

/// Exact attribution using all evaluation rows as background.
pub fn shapley_exact(beta: &[f64], eval_data: &Dataset, kind: ValueFunctionKind) -> Result<ShapleyEstimate> {
    if eval_data.n_vars() > MAX_EXACT_PLAYERS {
        return Err(Error::Config(format!(
            "exact enumeration is limited to {MAX_EXACT_PLAYERS} variables (got {}); use permutation sampling",
            eval_data.n_vars()
        )));
    }
    let all: Vec<usize> = (0..eval_data.n_rows()).collect();
    exact_shapley(&LogisticGame::new(beta, eval_data, &all, kind)?)
}

/// Sampled attribution with a background of at most
/// `config.background_rows` evaluation rows.
pub fn shapley_sample(
    beta: &[f64],
    eval_data: &Dataset,
    kind: ValueFunctionKind,
    config: &ShapleyConfig,
) -> Result<ShapleyEstimate> {
    config.validate()?;
    let bg = background_indices(eval_data.n_rows(), config.background_rows, config.seed);
    let game = LogisticGame::new(beta, eval_data, &bg, kind)?;
    sampled_shapley(&game, config.n_permutations, config.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanAbsShap {
    /// Mean `|phi|` per variable over the explained instances.
    pub mean_abs: Vec<f64>,
    /// Evaluation-row index of each explained instance.
    pub instances: Vec<usize>,
    /// One row of SHAP values per explained instance.
    pub values: Vec<Vec<f64>>,
}

fn summarise(d: usize, instances: Vec<usize>, values: Vec<Vec<f64>>) -> MeanAbsShap {
    let mean_abs = (0..d)
        .map(|j| compensated_mean(&values.iter().map(|r| r[j].abs()).collect::<Vec<_>>()))
        .collect();
    MeanAbsShap {
        mean_abs,
        instances,
        values,
    }
}

/// Local SHAP values for up to `config.max_instances` evaluation rows
/// (seeded subsample beyond that) and their mean absolute value.
pub fn mean_abs_shap(beta: &[f64], eval_data: &Dataset, config: &ShapleyConfig) -> Result<MeanAbsShap> {
    config.validate()?;
    let n = eval_data.n_rows();
    if n == 0 {
        return Err(Error::Validation("evaluation data is empty".into()));
    }
    let instances = if n <= config.max_instances {
        (0..n).collect::<Vec<_>>()
    } else {
        let mut rng = stream_rng(config.seed, &[INSTANCE_STREAM]);
        let mut idx = rand::seq::index::sample(&mut rng, n, config.max_instances).into_vec();
        idx.sort_unstable();
        idx
    };
    let bg = background_indices(n, config.background_rows, config.seed);
    let values = instances
        .par_iter()
        .map(|&i| {
            let game = LogisticGame::new(beta, eval_data, &bg, ValueFunctionKind::LocalShap(i))?;
            let seed = mix_seed(config.seed, &[INSTANCE_STREAM, i as u64]);
            Ok(sampled_shapley(&game, config.n_permutations, seed)?.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarise(eval_data.n_vars(), instances, values))
}

/// Exact counterpart of [`mean_abs_shap`] over the first `max_instances`
/// rows, with every evaluation row as background.
pub fn mean_abs_shap_exact(beta: &[f64], eval_data: &Dataset, max_instances: usize) -> Result<MeanAbsShap> {
    let n = eval_data.n_rows().min(max_instances);
    if n == 0 {
        return Err(Error::Validation("evaluation data is empty".into()));
    }
    let instances: Vec<usize> = (0..n).collect();
    let values = instances
        .iter()
        .map(|&i| Ok(shapley_exact(beta, eval_data, ValueFunctionKind::LocalShap(i))?.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarise(eval_data.n_vars(), instances, values))
}
