//! DerSimonian-Laird random-effects pooling of per-model reliance values,
//! treating each sampled model as a separate study.
//!
//! For values `x_m` with standard errors `s_m`:
//!
//! ```text
//! w_m  = 1 / s_m^2
//! Q    = sum w_m (x_m - sum(w x) / sum(w))^2
//! C    = sum(w) - sum(w^2) / sum(w)
//! tau2 = max(0, (Q - (M - 1)) / C)
//! w'_m = 1 / (s_m^2 + tau2)
//! mean = sum(w' x) / sum(w'),   var = 1 / sum(w')
//! PI   = mean -/+ t_{M-2, 0.975} sqrt(var + tau2)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::reliance::ModelReliance;
use crate::stats::student_t_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomEffects {
    pub pooled_mean: f64,
    pub pooled_var: f64,
    pub tau2: f64,
    pub q_stat: f64,
    pub c_scale: f64,
    pub pi_low: f64,
    pub pi_high: f64,
    pub significant: bool,
    pub m_models: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledImportance {
    pub variable: String,
    pub pooled_mean: f64,
    pub pooled_var: f64,
    pub tau2: f64,
    pub q_stat: f64,
    pub pi_low: f64,
    pub pi_high: f64,
    pub significant: bool,
    pub m_models: usize,
}

impl PooledImportance {
    pub fn new(variable: impl Into<String>, re: &RandomEffects) -> Self {
        Self {
            variable: variable.into(),
            pooled_mean: re.pooled_mean,
            pooled_var: re.pooled_var,
            tau2: re.tau2,
            q_stat: re.q_stat,
            pi_low: re.pi_low,
            pi_high: re.pi_high,
            significant: re.significant,
            m_models: re.m_models,
        }
    }
}

/// Pools `(value, se)` pairs, one per model. The input is put in a
/// canonical order first, so the result does not depend on model order.
pub fn pool_random_effects(estimates: &[(f64, f64)]) -> Result<RandomEffects> {
    let m = estimates.len();
    if m < 3 {
        return Err(Error::Numeric(format!(
            "random-effects prediction intervals need at least 3 models, got {m}"
        )));
    }
    if let Some((i, (_, se))) = estimates
        .iter()
        .enumerate()
        .find(|(_, (_, se))| !(*se > 0.0) || !se.is_finite())
    {
        return Err(Error::Numeric(format!(
            "standard error of model {i} is {se}; all standard errors must be positive"
        )));
    }
    if estimates.iter().any(|(x, _)| !x.is_finite()) {
        return Err(Error::Numeric("non-finite reliance value".into()));
    }
    let mut est = estimates.to_vec();
    est.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let w: Vec<f64> = est.iter().map(|(_, s)| 1.0 / (s * s)).collect();
    let sw = compensated_sum(w.iter().copied());
    let fixed_mean = compensated_sum(w.iter().zip(&est).map(|(w, (x, _))| w * x)) / sw;
    let q = compensated_sum(
        w.iter()
            .zip(&est)
            .map(|(w, (x, _))| w * (x - fixed_mean) * (x - fixed_mean)),
    );
    let c = sw - compensated_sum(w.iter().map(|w| w * w)) / sw;
    let df = (m - 1) as f64;
    let tau2 = if q > df { (q - df) / c } else { 0.0 };

    let w_re: Vec<f64> = est.iter().map(|(_, s)| 1.0 / (s * s + tau2)).collect();
    let sw_re = compensated_sum(w_re.iter().copied());
    let pooled_mean = compensated_sum(w_re.iter().zip(&est).map(|(w, (x, _))| w * x)) / sw_re;
    let pooled_var = 1.0 / sw_re;
    let t = student_t_quantile(0.975, (m - 2) as f64)?;
    let half = t * (pooled_var + tau2).sqrt();
    let pi_low = pooled_mean - half;
    Ok(RandomEffects {
        pooled_mean,
        pooled_var,
        tau2,
        q_stat: q,
        c_scale: c,
        pi_low,
        pi_high: pooled_mean + half,
        significant: pi_low > 0.0,
        m_models: m,
    })
}

/// Pools every variable across models; output sorted by pooled mean
/// descending (ties broken by variable name).
pub fn pool_all(reliances: &[ModelReliance], variable_names: &[String]) -> Result<Vec<PooledImportance>> {
    let d = variable_names.len();
    if let Some(r) = reliances.iter().find(|r| r.values.len() != d || r.se.len() != d) {
        return Err(Error::Validation(format!(
            "model {} covers {} variables, expected {d}",
            r.model_id,
            r.values.len()
        )));
    }
    let mut pooled = variable_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let pairs: Vec<(f64, f64)> = reliances.iter().map(|r| (r.values[j], r.se[j])).collect();
            let re = pool_random_effects(&pairs)
                .map_err(|e| Error::Numeric(format!("pooling `{name}`: {e}")))?;
            Ok(PooledImportance::new(name.clone(), &re))
        })
        .collect::<Result<Vec<_>>>()?;
    sort_by_importance(&mut pooled);
    Ok(pooled)
}

pub fn sort_by_importance(pooled: &mut [PooledImportance]) {
    pooled.sort_by(|a, b| {
        b.pooled_mean
            .total_cmp(&a.pooled_mean)
            .then_with(|| a.variable.cmp(&b.variable))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_model_hand_case() {
        let re = pool_random_effects(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!((re.q_stat - 8.0).abs() < 1e-12);
        assert!((re.c_scale - 8.0).abs() < 1e-12);
        assert!((re.tau2 - 0.75).abs() < 1e-12);
        assert!((re.pooled_mean - 2.0).abs() < 1e-12);
        assert!((re.pooled_var - 1.0 / 3.0).abs() < 1e-12);
        let half = 12.706_204_736_174_7 * (13.0f64 / 12.0).sqrt();
        assert!((re.pi_low - (2.0 - half)).abs() < 1e-9);
        assert!((re.pi_high - (2.0 + half)).abs() < 1e-9);
        assert!(!re.significant);
    }

    #[test]
    fn identical_values_take_zero_tau_branch() {
        let re = pool_random_effects(&[(1.0, 0.5); 5]).unwrap();
        assert_eq!(re.q_stat, 0.0);
        assert_eq!(re.tau2, 0.0);
        assert!((re.pooled_mean - 1.0).abs() < 1e-15);
        assert!((re.pooled_var - 0.05).abs() < 1e-15);
    }

    #[test]
    fn tight_positive_values_are_significant() {
        let est: Vec<(f64, f64)> = (0..10)
            .map(|i| (1.0 + if i % 2 == 0 { 0.001 } else { -0.001 }, 0.01))
            .collect();
        let re = pool_random_effects(&est).unwrap();
        assert!(re.significant);
        assert!(re.pi_low > 0.9);
    }

    #[test]
    fn input_errors() {
        assert!(pool_random_effects(&[(1.0, 0.5), (2.0, 0.5)]).is_err());
        assert!(pool_random_effects(&[(1.0, 0.5), (2.0, 0.0), (3.0, 0.5)]).is_err());
        assert!(pool_random_effects(&[(1.0, 0.5), (2.0, -1.0), (3.0, 0.5)]).is_err());
    }

    #[test]
    fn duplicated_outlier_can_raise_tau2() {
        // Eleven models at 0 and one at 2.2: a second copy of the outlier
        // pushes Q further above M - 1, tau2 grows and the pooled variance
        // widens.
        let mut est = vec![(0.0, 0.01); 11];
        est.push((2.216_205_410_815_607_3, 0.01));
        let a = pool_random_effects(&est).unwrap();
        est.push(est[11]);
        let b = pool_random_effects(&est).unwrap();
        assert!(b.tau2 > a.tau2);
        assert!(b.pooled_var > a.pooled_var);
    }

    fn reliance(id: usize, values: Vec<f64>) -> ModelReliance {
        let d = values.len();
        ModelReliance {
            model_id: id,
            values,
            se: vec![0.1; d],
            vif_gated: vec![false; d],
            empirical_loss: 0.5,
        }
    }

    #[test]
    fn pool_all_orders_and_checks_shape() {
        let names = vec!["a".to_string(), "b".to_string()];
        let rel: Vec<ModelReliance> = (0..4).map(|i| reliance(i, vec![0.1 * i as f64, 1.0])).collect();
        let out = pool_all(&rel, &names).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].variable, "b");
        assert!(out[0].pooled_mean >= out[1].pooled_mean);

        let mut reversed = rel.clone();
        reversed.reverse();
        assert_eq!(pool_all(&reversed, &names).unwrap(), out);

        let mut ragged = rel;
        ragged[2].values.pop();
        assert!(pool_all(&ragged, &names).is_err());
    }

    fn estimates() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-3.0f64..3.0, 0.01f64..2.0), 3..25)
    }

    proptest! {
        #[test]
        fn pooled_mean_is_convex_combination(est in estimates()) {
            let re = pool_random_effects(&est).unwrap();
            let lo = est.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let hi = est.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(re.pooled_mean >= lo - 1e-12 && re.pooled_mean <= hi + 1e-12);
            prop_assert!(re.pi_low <= re.pooled_mean && re.pooled_mean <= re.pi_high);
            prop_assert!(re.tau2 >= 0.0);
            prop_assert_eq!(re.tau2 == 0.0, re.q_stat <= (est.len() - 1) as f64);
            prop_assert_eq!(re.significant, re.pi_low > 0.0);
        }

        #[test]
        fn homogeneous_of_degree_one(est in estimates(), c in 0.1f64..10.0) {
            let a = pool_random_effects(&est).unwrap();
            let scaled: Vec<(f64, f64)> = est.iter().map(|(x, s)| (c * x, c * s)).collect();
            let b = pool_random_effects(&scaled).unwrap();
            let tol = 1e-9 * (1.0 + a.pi_high.abs().max(a.pi_low.abs())) * c.max(1.0);
            prop_assert!((b.pooled_mean - c * a.pooled_mean).abs() < tol);
            prop_assert!((b.pi_low - c * a.pi_low).abs() < tol);
            prop_assert!((b.pi_high - c * a.pi_high).abs() < tol);
            if a.pi_low.abs() > tol {
                prop_assert_eq!(a.significant, b.significant);
            }
        }

        // Holds whenever the heterogeneity estimate does not move; see
        // `duplicated_outlier_can_raise_tau2` for why it cannot hold in general.
        #[test]
        fn duplicating_a_model_never_widens_pooled_var(est in estimates(), pick in 0usize..100) {
            let a = pool_random_effects(&est).unwrap();
            let mut more = est.clone();
            more.push(est[pick % est.len()]);
            let b = pool_random_effects(&more).unwrap();
            if b.tau2 <= a.tau2 {
                prop_assert!(b.pooled_var <= a.pooled_var * (1.0 + 1e-12));
            }
        }

        #[test]
        fn duplicating_into_homogeneous_pool_never_widens(
            vals in prop::collection::vec(0.0f64..0.01, 3..20),
            pick in 0usize..100,
        ) {
            let est: Vec<(f64, f64)> = vals.iter().map(|&v| (v, 0.5)).collect();
            let a = pool_random_effects(&est).unwrap();
            let mut more = est.clone();
            more.push(est[pick % est.len()]);
            let b = pool_random_effects(&more).unwrap();
            prop_assert_eq!(a.tau2, 0.0);
            prop_assert_eq!(b.tau2, 0.0);
            prop_assert!(b.pooled_var < a.pooled_var);
        }

        #[test]
        fn order_invariant(mut est in estimates(), rot in 0usize..25) {
            let a = pool_random_effects(&est).unwrap();
            let k = rot % est.len();
            est.rotate_left(k);
            prop_assert_eq!(a, pool_random_effects(&est).unwrap());
        }
    }
}
