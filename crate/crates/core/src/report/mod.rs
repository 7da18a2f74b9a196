//! Figures: pooled bar chart with prediction intervals, loss-coloured
//! violins of per-model reliance, and a SHAP strip plot. Each figure is a
//! standalone SVG plus a CSV of the plotted numbers.

mod svg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_mean;
use crate::pooling::PooledImportance;

pub use svg::{bar_svg, render_bar_svg, render_violin_svg, shap_strip_svg, violin_svg, LOSS_HIGH_COLOR, LOSS_LOW_COLOR};

pub const DEFAULT_SLICES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolinSlice {
    pub lo: f64,
    pub hi: f64,
    pub proportion: f64,
    pub mean_loss: f64,
    pub model_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolinSummary {
    pub variable: String,
    pub slices: Vec<ViolinSlice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarDatum {
    pub variable: String,
    pub pooled_mean: f64,
    pub pi_low: f64,
    pub pi_high: f64,
    pub significant: bool,
}

impl From<&PooledImportance> for BarDatum {
    fn from(p: &PooledImportance) -> Self {
        Self {
            variable: p.variable.clone(),
            pooled_mean: p.pooled_mean,
            pi_low: p.pi_low,
            pi_high: p.pi_high,
            significant: p.significant,
        }
    }
}

/// Bins one variable's reliance values (one per model) into `n_slices`
/// equal-width slices of `[min, max]`. A run of empty slices is absorbed by
/// whichever non-empty neighbour has its centre closer to the middle of the
/// range; on a tie the higher-index neighbour wins. The end slices always
/// hold the extremes, so every empty run has two neighbours.
pub fn build_violin(variable: &str, values: &[f64], losses: &[f64], n_slices: usize) -> Result<ViolinSummary> {
    let m = values.len();
    if m == 0 {
        return Err(Error::Validation(format!("no models to summarise for `{variable}`")));
    }
    if losses.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: losses.len(),
        });
    }
    if n_slices == 0 {
        return Err(Error::Config("n_slices must be at least 1".into()));
    }
    if values.iter().chain(losses).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite reliance or loss for `{variable}`")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = if max > min { n_slices } else { 1 };
    let edge = |k: usize| {
        if k == n {
            max
        } else {
            min + (max - min) * k as f64 / n as f64
        }
    };

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &v) in values.iter().enumerate() {
        let k = if n == 1 {
            0
        } else {
            (((v - min) / (max - min) * n as f64).floor() as usize).min(n - 1)
        };
        members[k].push(i);
    }

    let mid = 0.5 * (min + max);
    let centre = |k: usize| 0.5 * (edge(k) + edge(k + 1));
    let mut owner: Vec<usize> = (0..n).collect();
    let mut k = 0;
    while k < n {
        if !members[k].is_empty() {
            k += 1;
            continue;
        }
        let start = k;
        while members[k].is_empty() {
            k += 1;
        }
        let (left, right) = (start - 1, k);
        let target = if (centre(right) - mid).abs() <= (centre(left) - mid).abs() {
            right
        } else {
            left
        };
        owner[start..k].fill(target);
    }

    let mut slices = Vec::new();
    let mut k = 0;
    while k < n {
        let o = owner[k];
        let lo = edge(k);
        while k < n && owner[k] == o {
            k += 1;
        }
        let idx = &members[o];
        let slice_losses: Vec<f64> = idx.iter().map(|&i| losses[i]).collect();
        slices.push(ViolinSlice {
            lo,
            hi: edge(k),
            proportion: idx.len() as f64 / m as f64,
            mean_loss: compensated_mean(&slice_losses),
            model_count: idx.len(),
        });
    }
    Ok(ViolinSummary {
        variable: variable.to_string(),
        slices,
    })
}

/// Per-instance SHAP values in long form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapPoint {
    pub instance_id: usize,
    pub variable: String,
    pub shap_value: f64,
    pub feature_value: f64,
}

/// Flattens an `n x d` SHAP matrix and matching feature values.
pub fn shap_long_format(
    variable_names: &[String],
    instance_ids: &[usize],
    shap: &[Vec<f64>],
    features: &[Vec<f64>],
) -> Result<Vec<ShapPoint>> {
    let d = variable_names.len();
    if shap.len() != instance_ids.len() || features.len() != shap.len() {
        return Err(Error::DimensionMismatch {
            expected: instance_ids.len(),
            actual: shap.len().max(features.len()),
        });
    }
    let mut out = Vec::with_capacity(shap.len() * d);
    for ((&id, s), x) in instance_ids.iter().zip(shap).zip(features) {
        if s.len() != d || x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: if s.len() != d { s.len() } else { x.len() },
            });
        }
        for j in 0..d {
            out.push(ShapPoint {
                instance_id: id,
                variable: variable_names[j].clone(),
                shap_value: s[j],
                feature_value: x[j],
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_slices_by_hand() {
        let v = build_violin("x", &[0.0, 1.0, 2.0, 3.0], &[0.1, 0.2, 0.3, 0.5], 2).unwrap();
        assert_eq!(v.slices.len(), 2);
        assert_eq!((v.slices[0].lo, v.slices[0].hi), (0.0, 1.5));
        assert_eq!((v.slices[1].lo, v.slices[1].hi), (1.5, 3.0));
        assert_eq!(v.slices[0].proportion, 0.5);
        assert!((v.slices[0].mean_loss - 0.15).abs() < 1e-15);
        assert!((v.slices[1].mean_loss - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_middle_slice_merges() {
        let v = build_violin("x", &[0.0, 3.0], &[0.1, 0.2], 3).unwrap();
        assert_eq!(v.slices.len(), 2);
        assert_eq!(v.slices[0].proportion, 0.5);
        assert_eq!(v.slices[1].proportion, 0.5);
        // tie between the neighbours goes to the higher index
        assert_eq!((v.slices[0].lo, v.slices[0].hi), (0.0, 1.0));
        assert_eq!((v.slices[1].lo, v.slices[1].hi), (1.0, 3.0));
    }

    #[test]
    fn empty_run_joins_side_nearer_middle() {
        // 10 slices of width 1 over [0, 10]; slices 1..=2 are empty and
        // their right neighbour (centre 3.5) is nearer 5 than the left (0.5)
        let values = [0.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5, 10.0, 0.0];
        let v = build_violin("x", &values, &[0.0; 10], 10).unwrap();
        assert_eq!(v.slices.len(), 8);
        assert_eq!((v.slices[0].lo, v.slices[0].hi), (0.0, 1.0));
        assert_eq!((v.slices[1].lo, v.slices[1].hi), (1.0, 4.0));
        assert_eq!(v.slices[1].model_count, 1);
    }

    #[test]
    fn single_model_and_constant_values() {
        let v = build_violin("x", &[0.7], &[0.4], 20).unwrap();
        assert_eq!(v.slices.len(), 1);
        assert_eq!(v.slices[0].proportion, 1.0);
        assert_eq!(v.slices[0].mean_loss, 0.4);
        let c = build_violin("x", &[1.0; 5], &[0.4; 5], 20).unwrap();
        assert_eq!(c.slices.len(), 1);
        assert_eq!(c.slices[0].model_count, 5);
    }

    #[test]
    fn violin_errors() {
        assert!(build_violin("x", &[], &[], 3).is_err());
        assert!(build_violin("x", &[1.0], &[0.1, 0.2], 3).is_err());
        assert!(build_violin("x", &[1.0], &[0.1], 0).is_err());
    }

    #[test]
    fn long_format_shape() {
        let names = vec!["a".to_string()];
        let pts = shap_long_format(&names, &[4], &[vec![0.2]], &[vec![1.0]]).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].instance_id, 4);
        assert!(shap_long_format(&names, &[4], &[vec![0.2, 0.1]], &[vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn slices_partition_models(
            values in prop::collection::vec(-2.0f64..2.0, 1..200),
            n_slices in 1usize..40,
        ) {
            let losses: Vec<f64> = values.iter().map(|v| 0.5 + 0.01 * v.abs()).collect();
            let v = build_violin("x", &values, &losses, n_slices).unwrap();
            let total: usize = v.slices.iter().map(|s| s.model_count).sum();
            prop_assert_eq!(total, values.len());
            let p: f64 = v.slices.iter().map(|s| s.proportion).sum();
            prop_assert!((p - 1.0).abs() < 1e-12);
            prop_assert!(v.slices.iter().all(|s| s.model_count >= 1));
            for w in v.slices.windows(2) {
                prop_assert_eq!(w[0].hi, w[1].lo);
            }
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(v.slices[0].lo, min);
            prop_assert_eq!(v.slices.last().unwrap().hi, max);
        }
    }
}
