//! Rejection sampling of nearly-optimal logistic models.
//!
//! Candidates are drawn as `beta ~ N(beta*, k * Sigma*)` with
//! `k ~ U(u1, u2)` and kept when their training loss stays within
//! `(1 + epsilon) L*`. Rounds repeat (doubling the draw count and widening
//! `u2`) until every equal-width bin of the admissible loss range holds at
//! least `target_min / coverage_bins` models. The final sample is drawn
//! uniformly within bins, with bins filled as evenly as their counts allow.

use log::warn;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{log_loss_unchecked, FittedModel};
use crate::numeric::stream_rng;

/// Tolerance below `L*` that a sampled model's loss may reach before the
/// reference fit is considered non-optimal.
pub const OPTIMUM_SLACK: f64 = 1e-9;

const SELECT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub epsilon: f64,
    pub m0: usize,
    pub u1: f64,
    pub u2: f64,
    pub target_min: usize,
    pub target_max: usize,
    /// Requested final count, clamped to the accepted pool size.
    pub n_models: usize,
    pub coverage_bins: usize,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            m0: 5000,
            u1: 0.5,
            u2: 40.0,
            target_min: 300,
            target_max: 400,
            n_models: 350,
            coverage_bins: 10,
            max_rounds: 5,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon == 0.0 {
            return Err(Error::Degenerate("epsilon = 0 admits only the optimal model".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if !(self.u1 > 0.0 && self.u1 <= self.u2 && self.u2.is_finite()) {
            return Err(Error::Config(format!(
                "uniform bounds need 0 < u1 <= u2, got u1={} u2={}",
                self.u1, self.u2
            )));
        }
        if self.target_min == 0 || self.target_min > self.target_max {
            return Err(Error::Config(format!(
                "need 1 <= target_min <= target_max, got {} and {}",
                self.target_min, self.target_max
            )));
        }
        if self.n_models < self.target_min || self.n_models > self.target_max {
            return Err(Error::Config(format!(
                "n_models {} outside [{}, {}]",
                self.n_models, self.target_min, self.target_max
            )));
        }
        if self.m0 == 0 || self.coverage_bins == 0 || self.max_rounds == 0 {
            return Err(Error::Config("m0, coverage_bins and max_rounds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSample {
    pub beta: Vec<f64>,
    pub empirical_loss: f64,
    pub k_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDiagnostics {
    pub rounds: usize,
    pub drawn: usize,
    pub accepted: usize,
    /// Accepted-pool counts per loss bin before final selection.
    pub pool_bin_counts: Vec<usize>,
    pub coverage_met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RashomonSample {
    pub reference: FittedModel,
    pub models: Vec<ModelSample>,
    pub config: SamplerConfig,
    pub diagnostics: SamplingDiagnostics,
}

impl RashomonSample {
    pub fn loss_range(&self) -> (f64, f64) {
        (
            self.reference.train_loss,
            loss_bound(&self.reference, self.config.epsilon),
        )
    }
}

/// Rejection threshold `(1 + epsilon) L*`.
pub fn loss_bound(fitted: &FittedModel, epsilon: f64) -> f64 {
    (1.0 + epsilon) * fitted.train_loss
}

/// Bin of `loss` among `bins` equal-width bins of `[lo, hi]`.
pub fn loss_bin(loss: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = ((loss - lo) / (hi - lo) * bins as f64).floor();
    if t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

pub fn bin_counts(losses: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for l in losses {
        counts[loss_bin(l, lo, hi, bins)] += 1;
    }
    counts
}

/// Per-bin quotas summing to `total` that fill bins as evenly as their
/// counts allow. Leftover units go to the lowest-index open bins.
fn even_quotas(counts: &[usize], total: usize) -> Vec<usize> {
    let mut quotas = vec![0; counts.len()];
    let mut order: Vec<usize> = (0..counts.len()).filter(|&b| counts[b] > 0).collect();
    order.sort_by_key(|&b| (counts[b], b));
    let mut remaining = total;
    let mut open = order.len();
    let mut cursor = 0;
    while cursor < order.len() {
        let b = order[cursor];
        let share = remaining / open;
        if counts[b] <= share {
            quotas[b] = counts[b];
            remaining -= counts[b];
            open -= 1;
            cursor += 1;
        } else {
            break;
        }
    }
    if cursor < order.len() {
        let mut rest: Vec<usize> = order[cursor..].to_vec();
        rest.sort_unstable();
        let base = remaining / rest.len();
        let extra = remaining % rest.len();
        for (i, &b) in rest.iter().enumerate() {
            quotas[b] = base + usize::from(i < extra);
        }
    }
    quotas
}

pub fn sample_rashomon(fitted: &FittedModel, train: &Dataset, config: &SamplerConfig) -> Result<RashomonSample> {
    config.validate()?;
    let p = fitted.beta.len();
    if p != train.n_vars() + 1 {
        return Err(Error::DimensionMismatch {
            expected: train.n_vars() + 1,
            actual: p,
        });
    }
    let chol = fitted.covariance_matrix().cholesky().ok_or_else(|| {
        Error::Numeric("reference covariance is not positive definite".into())
    })?;
    let factor = chol.l();
    let center = DVector::from_column_slice(&fitted.beta);
    let lo = fitted.train_loss;
    let hi = loss_bound(fitted, config.epsilon);
    let per_bin = config.target_min.div_ceil(config.coverage_bins);

    let mut pool: Vec<ModelSample> = Vec::new();
    let mut drawn = 0;
    let mut rounds = 0;
    let mut coverage_met = false;
    let mut u2 = config.u2;
    let mut m = config.m0;

    for round in 0..config.max_rounds {
        rounds += 1;
        let u1 = config.u1;
        let candidates: Vec<Result<Option<ModelSample>>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(config.seed, &[round as u64, i as u64]);
                let k = if u2 > u1 { rng.random_range(u1..u2) } else { u1 };
                let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
                let beta = &center + (&factor * z) * k.sqrt();
                let beta: Vec<f64> = beta.iter().copied().collect();
                let loss = log_loss_unchecked(&beta, train);
                if loss < lo - OPTIMUM_SLACK {
                    return Err(Error::Numeric(format!(
                        "sampled model has loss {loss} below the reference optimum {lo}; the reference fit is not optimal"
                    )));
                }
                Ok((loss <= hi).then_some(ModelSample {
                    beta,
                    empirical_loss: loss,
                    k_multiplier: k,
                }))
            })
            .collect();
        drawn += m;
        for c in candidates {
            if let Some(s) = c? {
                pool.push(s);
            }
        }
        let counts = bin_counts(pool.iter().map(|s| s.empirical_loss), lo, hi, config.coverage_bins);
        if counts.iter().all(|&c| c >= per_bin) {
            coverage_met = true;
            break;
        }
        m *= 2;
        u2 *= 1.5;
    }

    let pool_bins: Vec<usize> = pool
        .iter()
        .map(|s| loss_bin(s.empirical_loss, lo, hi, config.coverage_bins))
        .collect();
    let mut pool_bin_counts = vec![0; config.coverage_bins];
    for &b in &pool_bins {
        pool_bin_counts[b] += 1;
    }
    if pool.len() < config.target_min {
        return Err(Error::InsufficientSamples {
            accepted: pool.len(),
            required: config.target_min,
            rounds,
            rate: pool.len() as f64 / drawn as f64,
            bins: pool_bin_counts,
        });
    }
    if !coverage_met {
        warn!(
            "loss range not fully represented after {rounds} round(s); per-bin counts {pool_bin_counts:?}"
        );
    }

    let n_final = config.n_models.min(pool.len());
    let quotas = even_quotas(&pool_bin_counts, n_final);
    let mut chosen = Vec::with_capacity(n_final);
    for (b, &quota) in quotas.iter().enumerate() {
        let members: Vec<usize> = (0..pool.len()).filter(|&i| pool_bins[i] == b).collect();
        if quota == members.len() {
            chosen.extend(members);
        } else {
            let mut rng = stream_rng(config.seed, &[SELECT_STREAM, b as u64]);
            chosen.extend(
                rand::seq::index::sample(&mut rng, members.len(), quota)
                    .into_iter()
                    .map(|i| members[i]),
            );
        }
    }
    chosen.sort_unstable();
    let accepted = pool.len();
    let models: Vec<ModelSample> = chosen.into_iter().map(|i| pool[i].clone()).collect();

    Ok(RashomonSample {
        reference: fitted.clone(),
        models,
        config: config.clone(),
        diagnostics: SamplingDiagnostics {
            rounds,
            drawn,
            accepted,
            pool_bin_counts,
            coverage_met,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::{fit_logistic, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::synthetic;

    #[test]
    fn loss_bound_arithmetic() {
        let mut fit = synthetic::reference_model_stub(0.6);
        assert!((loss_bound(&fit, 0.05) - 0.63).abs() < 1e-15);
        assert_eq!(loss_bound(&fit, 0.0), 0.6);
        fit.train_loss = 0.4;
        assert!(loss_bound(&fit, 0.1) > loss_bound(&fit, 0.05));
        assert_eq!(SamplerConfig::default().epsilon, 0.05);
    }

    #[test]
    fn quotas_fill_evenly() {
        assert_eq!(even_quotas(&[100, 100, 100], 90), vec![30, 30, 30]);
        assert_eq!(even_quotas(&[5, 100, 100], 65), vec![5, 30, 30]);
        assert_eq!(even_quotas(&[5, 100, 100], 66), vec![5, 31, 30]);
        assert_eq!(even_quotas(&[0, 10, 3], 13), vec![0, 10, 3]);
        let q = even_quotas(&[40, 7, 90, 12, 0, 33], 100);
        assert_eq!(q.iter().sum::<usize>(), 100);
        for (c, q) in [40, 7, 90, 12, 0, 33].iter().zip(&q) {
            assert!(q <= c);
        }
    }

    #[test]
    fn config_validation() {
        let ok = SamplerConfig::default();
        assert!(ok.validate().is_ok());
        let zero = SamplerConfig { epsilon: 0.0, ..ok.clone() };
        assert!(matches!(zero.validate(), Err(Error::Degenerate(_))));
        let swapped = SamplerConfig { u1: 5.0, u2: 1.0, ..ok.clone() };
        assert!(swapped.validate().is_err());
        let bad_target = SamplerConfig { target_min: 500, ..ok.clone() };
        assert!(bad_target.validate().is_err());
        let equal = SamplerConfig { u1: 1e-9, u2: 1e-9, ..ok };
        assert!(equal.validate().is_ok());
    }

    #[test]
    fn collapsed_multiplier_reproduces_optimum() {
        let ds = synthetic::benchmark(1200, 3);
        let fit = fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let config = SamplerConfig {
            u1: 1e-9,
            u2: 1e-9,
            m0: 400,
            max_rounds: 1,
            seed: 5,
            ..SamplerConfig::default()
        };
        let sample = sample_rashomon(&fit, &ds, &config).unwrap();
        assert_eq!(sample.diagnostics.accepted, 400);
        assert_eq!(sample.models.len(), 350);
        for m in &sample.models {
            assert!((m.empirical_loss - fit.train_loss).abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_acceptances_is_reported() {
        let ds = synthetic::benchmark(1200, 4);
        let fit = fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let config = SamplerConfig {
            epsilon: 1e-6,
            u1: 1e3,
            u2: 2e3,
            m0: 50,
            max_rounds: 2,
            ..SamplerConfig::default()
        };
        match sample_rashomon(&fit, &ds, &config) {
            Err(Error::InsufficientSamples { rounds, bins, .. }) => {
                assert_eq!(rounds, 2);
                assert_eq!(bins.len(), 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
