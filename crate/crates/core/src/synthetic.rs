//! Seeded synthetic benchmark with six variables and a known logistic
//! data-generating model.
//!
//! | variable      | distribution                         | true coefficient |
//! |---------------|--------------------------------------|------------------|
//! | `dominant`    | N(0, 1)                              | 1.2              |
//! | `strong`      | N(0, 1)                              | -0.8             |
//! | `moderate`    | N(0, 1)                              | 0.4              |
//! | `correlated`  | 0.5 moderate + sqrt(0.75) N(0, 1)    | 0.2              |
//! | `binary`      | Bernoulli(0.4)                       | 0.3              |
//! | `noise`       | N(0, 1), independent of the outcome  | 0.0              |
//!
//! The intercept is -0.5.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::numeric::{sigmoid, stream_rng};

pub const BENCHMARK_NAMES: [&str; 6] = ["dominant", "strong", "moderate", "correlated", "binary", "noise"];
pub const BENCHMARK_BETA: [f64; 7] = [-0.5, 1.2, -0.8, 0.4, 0.2, 0.3, 0.0];
pub const BENCHMARK_OUTCOME: &str = "outcome";

pub fn benchmark(n: usize, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, &[]);
    let mut features = Vec::with_capacity(n * 6);
    let mut outcome = Vec::with_capacity(n);
    for _ in 0..n {
        let dominant: f64 = rng.sample(StandardNormal);
        let strong: f64 = rng.sample(StandardNormal);
        let moderate: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let correlated = 0.5 * moderate + 0.75f64.sqrt() * e;
        let binary = if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 };
        let noise: f64 = rng.sample(StandardNormal);
        let row = [dominant, strong, moderate, correlated, binary, noise];
        let eta = BENCHMARK_BETA[0]
            + row
                .iter()
                .zip(&BENCHMARK_BETA[1..])
                .map(|(x, b)| x * b)
                .sum::<f64>();
        let y = if rng.random::<f64>() < sigmoid(eta) { 1.0 } else { 0.0 };
        features.extend_from_slice(&row);
        outcome.push(y);
    }
    let names = BENCHMARK_NAMES.iter().map(|s| s.to_string()).collect();
    Dataset::new(names, features, outcome).expect("benchmark data satisfies dataset invariants")
}

#[cfg(test)]
pub(crate) fn reference_model_stub(train_loss: f64) -> crate::glm::FittedModel {
    use crate::glm::{FitInfo, FittedModel};
    FittedModel {
        family: "logistic".into(),
        variable_names: vec!["a".into(), "b".into()],
        beta: vec![0.0; 3],
        covariance: (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
        train_loss,
        vif: vec![1.0, 1.0],
        n_obs: 100,
        fit: FitInfo {
            tol: 1e-8,
            max_iter: 100,
            iterations: 0,
            max_abs_gradient: 0.0,
            loss_trace: vec![train_loss],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_is_deterministic_and_balanced_enough() {
        let a = benchmark(2000, 1);
        let b = benchmark(2000, 1);
        assert_eq!(a, b);
        assert_ne!(a, benchmark(2000, 2));
        let rate = a.outcome().iter().sum::<f64>() / 2000.0;
        assert!(rate > 0.25 && rate < 0.6, "{rate}");
    }
}
