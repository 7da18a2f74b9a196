//! Model reliance per sampled model: VIF-gated Shapley importance, and the
//! permutation-based loss ratio used for comparison.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{clipped_log_loss, linear_predictor, log_loss};
use crate::numeric::{compensated_mean, sample_sd, sigmoid, stream_rng, NeumaierSum};
use crate::rashomon::ModelSample;
use crate::shapley::{shapley_sample, ShapleyConfig, ShapleyEstimate, ValueFunctionKind};

/// Variables with `VIF >= VIF_GATE` report `|phi|`.
pub const VIF_GATE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReliance {
    pub model_id: usize,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub vif_gated: Vec<bool>,
    pub empirical_loss: f64,
}

/// Folds the sign of values whose variable has `VIF >= 2`.
pub fn gate_values(values: &[f64], vif: &[f64]) -> Result<(Vec<f64>, Vec<bool>)> {
    if values.len() != vif.len() {
        return Err(Error::DimensionMismatch {
            expected: vif.len(),
            actual: values.len(),
        });
    }
    Ok(values
        .iter()
        .zip(vif)
        .map(|(&v, &f)| if f >= VIF_GATE { (v.abs(), true) } else { (v, false) })
        .unzip())
}

/// Converts a raw Shapley estimate into model reliance. Standard errors are
/// carried over unchanged.
pub fn apply_vif_gate(
    model_id: usize,
    estimate: &ShapleyEstimate,
    vif: &[f64],
    empirical_loss: f64,
) -> Result<ModelReliance> {
    let (values, vif_gated) = gate_values(&estimate.values, vif)?;
    Ok(ModelReliance {
        model_id,
        values,
        se: estimate.se.clone(),
        vif_gated,
        empirical_loss,
    })
}

/// Sampled SAGE values of one model on `eval_data`, then the VIF gate.
pub fn compute_shapley_vic(
    model_id: usize,
    model: &ModelSample,
    vif: &[f64],
    eval_data: &Dataset,
    config: &ShapleyConfig,
) -> Result<(ShapleyEstimate, ModelReliance)> {
    let estimate = shapley_sample(&model.beta, eval_data, ValueFunctionKind::GlobalSage, config)?;
    let reliance = apply_vif_gate(model_id, &estimate, vif, model.empirical_loss)?;
    Ok((estimate, reliance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationReliance {
    pub model_id: usize,
    /// `mr_j - 1`, where `mr_j` is permuted loss over original loss.
    pub values_minus_one: Vec<f64>,
    /// Standard error of the per-permutation ratios (zero for one permutation).
    pub se: Vec<f64>,
    pub n_permutations: usize,
}

/// Permutation model reliance: for each variable, the mean loss after
/// shuffling that column (averaged over `n_permutations` shuffles) divided
/// by the unshuffled loss, minus one.
pub fn compute_vic_permutation(
    model_id: usize,
    model: &ModelSample,
    eval_data: &Dataset,
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationReliance> {
    if n_permutations == 0 {
        return Err(Error::Config("at least one permutation is required".into()));
    }
    let base = log_loss(&model.beta, eval_data)?;
    if !(base > 0.0) {
        return Err(Error::Numeric(format!(
            "model {model_id} has zero loss on the evaluation data; reliance ratio undefined"
        )));
    }
    let n = eval_data.n_rows();
    let d = eval_data.n_vars();
    let mut values = Vec::with_capacity(d);
    let mut se = Vec::with_capacity(d);
    let mut row = vec![0.0; d];
    for j in 0..d {
        let ratios: Vec<f64> = (0..n_permutations)
            .map(|r| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut stream_rng(seed, &[j as u64, r as u64]));
                let mut acc = NeumaierSum::new();
                for (i, &src) in perm.iter().enumerate() {
                    row.copy_from_slice(eval_data.row(i));
                    row[j] = eval_data.value(src, j);
                    let p = sigmoid(linear_predictor(&model.beta, &row));
                    acc.add(clipped_log_loss(p, eval_data.outcome()[i]));
                }
                (acc.total() / n as f64) / base
            })
            .collect();
        values.push(compensated_mean(&ratios) - 1.0);
        se.push(sample_sd(&ratios) / (n_permutations as f64).sqrt());
    }
    Ok(PermutationReliance {
        model_id,
        values_minus_one: values,
        se,
        n_permutations,
    })
}
