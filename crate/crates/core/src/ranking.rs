//! Within-model variable ranking from pairwise z-tests, and rank
//! frequencies across the Rashomon set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reliance::ModelReliance;
use crate::stats::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    Greater,
    Less,
    Tie,
}

impl Comparison {
    pub fn reverse(self) -> Self {
        match self {
            Comparison::Greater => Comparison::Less,
            Comparison::Less => Comparison::Greater,
            Comparison::Tie => Comparison::Tie,
        }
    }
}

fn critical_z(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    normal_quantile(1.0 - alpha / 2.0)
}

fn compare(a: f64, se_a: f64, b: f64, se_b: f64, z_crit: f64) -> Comparison {
    let z = (a - b) / (se_a * se_a + se_b * se_b).sqrt();
    if z > z_crit {
        Comparison::Greater
    } else if z < -z_crit {
        Comparison::Less
    } else {
        Comparison::Tie
    }
}

/// Two-sided z-test of `phi_j - phi_k` for every ordered pair. Entry
/// `[j][k]` reads "j compared with k"; the diagonal is `Tie`.
pub fn pairwise_significance(reliance: &ModelReliance, alpha: f64) -> Result<Vec<Vec<Comparison>>> {
    let z_crit = critical_z(alpha)?;
    let d = reliance.values.len();
    if reliance.se.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: reliance.se.len(),
        });
    }
    if let Some(j) = reliance.se.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Numeric(format!(
            "model {}: variable {j} has non-positive standard error",
            reliance.model_id
        )));
    }
    let mut out = vec![vec![Comparison::Tie; d]; d];
    for j in 0..d {
        for k in (j + 1)..d {
            let c = compare(
                reliance.values[j],
                reliance.se[j],
                reliance.values[k],
                reliance.se[k],
                z_crit,
            );
            out[j][k] = c;
            out[k][j] = c.reverse();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanking {
    pub model_id: usize,
    /// Number of variables each one significantly exceeds.
    pub wins: Vec<usize>,
    /// Competition ranks, 1 = most important; tied win counts share a rank.
    pub ranks: Vec<usize>,
}

pub fn rank_variables(reliance: &ModelReliance, alpha: f64) -> Result<ModelRanking> {
    let table = pairwise_significance(reliance, alpha)?;
    let wins: Vec<usize> = table
        .iter()
        .map(|row| row.iter().filter(|c| **c == Comparison::Greater).count())
        .collect();
    let ranks = wins
        .iter()
        .map(|w| 1 + wins.iter().filter(|o| *o > w).count())
        .collect();
    Ok(ModelRanking {
        model_id: reliance.model_id,
        wins,
        ranks,
    })
}

/// `counts[r][k]`: how many models put variable `order[r]` at rank `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankFrequency {
    pub variables: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl RankFrequency {
    pub fn n_models(&self) -> usize {
        self.counts.first().map_or(0, |row| row.iter().sum())
    }
}

/// Tallies ranks over models. Rows follow `order` (indices into
/// `variable_names`), typically the pooled-importance order.
pub fn rank_frequency(
    rankings: &[ModelRanking],
    variable_names: &[String],
    order: Option<&[usize]>,
) -> Result<RankFrequency> {
    let d = variable_names.len();
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut seen = vec![false; d];
            for &j in o {
                if j >= d || std::mem::replace(&mut seen[j], true) {
                    return Err(Error::Validation(format!("invalid variable order {o:?}")));
                }
            }
            if o.len() != d {
                return Err(Error::Validation(format!("variable order {o:?} does not cover all {d} variables")));
            }
            o.to_vec()
        }
        None => (0..d).collect(),
    };
    let mut counts = vec![vec![0usize; d]; d];
    for r in rankings {
        if r.ranks.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: r.ranks.len(),
            });
        }
        for (row, &j) in order.iter().enumerate() {
            counts[row][r.ranks[j] - 1] += 1;
        }
    }
    Ok(RankFrequency {
        variables: order.iter().map(|&j| variable_names[j].clone()).collect(),
        counts,
    })
}

/// Model ids whose rank for `variable` is at most `max_rank`.
pub fn filter_models_by_rank(
    rankings: &[ModelRanking],
    variable_names: &[String],
    variable: &str,
    max_rank: usize,
) -> Result<Vec<usize>> {
    let j = variable_names
        .iter()
        .position(|v| v == variable)
        .ok_or_else(|| Error::MissingColumn(variable.to_string()))?;
    Ok(rankings
        .iter()
        .filter(|r| r.ranks[j] <= max_rank)
        .map(|r| r.model_id)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(values: Vec<f64>, se: Vec<f64>) -> ModelReliance {
        let d = values.len();
        ModelReliance {
            model_id: 0,
            values,
            se,
            vif_gated: vec![false; d],
            empirical_loss: 0.5,
        }
    }

    #[test]
    fn clear_separation_and_ties() {
        let r = rel(vec![1.0, 0.5, 0.49, 0.0], vec![0.01; 4]);
        let t = pairwise_significance(&r, 0.05).unwrap();
        assert_eq!(t[0][1], Comparison::Greater);
        assert_eq!(t[1][2], Comparison::Tie);
        assert_eq!(t[3][0], Comparison::Less);
        let ranks = rank_variables(&r, 0.05).unwrap();
        assert_eq!(ranks.wins, vec![3, 1, 1, 0]);
        assert_eq!(ranks.ranks, vec![1, 2, 2, 4]);
    }

    #[test]
    fn critical_value_boundary() {
        // z = 0.1 / sqrt(2 * 0.05^2) = 1.414..., below 1.96
        let r = rel(vec![0.1, 0.0], vec![0.05, 0.05]);
        assert_eq!(pairwise_significance(&r, 0.05).unwrap()[0][1], Comparison::Tie);
        // and above the alpha = 0.2 cutoff of 1.2816
        assert_eq!(pairwise_significance(&r, 0.2).unwrap()[0][1], Comparison::Greater);
    }

    #[test]
    fn input_errors() {
        assert!(pairwise_significance(&rel(vec![1.0, 0.0], vec![0.1, 0.0]), 0.05).is_err());
        assert!(pairwise_significance(&rel(vec![1.0, 0.0], vec![0.1, 0.1]), 0.0).is_err());
        assert!(pairwise_significance(&rel(vec![1.0, 0.0], vec![0.1, 0.1]), 1.0).is_err());
    }

    #[test]
    fn frequency_table_and_filter() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let rankings = vec![
            ModelRanking { model_id: 0, wins: vec![2, 1, 0], ranks: vec![1, 2, 3] },
            ModelRanking { model_id: 1, wins: vec![0, 2, 0], ranks: vec![2, 1, 2] },
            ModelRanking { model_id: 2, wins: vec![1, 1, 0], ranks: vec![1, 1, 3] },
        ];
        let f = rank_frequency(&rankings, &names, Some(&[1, 0, 2])).unwrap();
        assert_eq!(f.variables, vec!["b", "a", "c"]);
        assert_eq!(f.counts[0], vec![2, 1, 0]);
        assert_eq!(f.counts[1], vec![2, 1, 0]);
        assert_eq!(f.counts[2], vec![0, 1, 2]);
        assert_eq!(f.n_models(), 3);
        assert_eq!(filter_models_by_rank(&rankings, &names, "a", 1).unwrap(), vec![0, 2]);
        assert!(filter_models_by_rank(&rankings, &names, "zzz", 1).is_err());
        assert!(rank_frequency(&rankings, &names, Some(&[0, 0, 2])).is_err());
    }

    fn model() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..7).prop_flat_map(|d| {
            (
                prop::collection::vec(-1.0f64..1.0, d),
                prop::collection::vec(0.01f64..0.5, d),
            )
        })
    }

    proptest! {
        #[test]
        fn antisymmetric((v, s) in model()) {
            let t = pairwise_significance(&rel(v, s), 0.05).unwrap();
            for j in 0..t.len() {
                prop_assert_eq!(t[j][j], Comparison::Tie);
                for k in 0..t.len() {
                    prop_assert_eq!(t[j][k], t[k][j].reverse());
                }
            }
        }

        #[test]
        fn larger_alpha_never_removes_a_decision((v, s) in model(), a in 0.01f64..0.5, b in 0.01f64..0.5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let r = rel(v, s);
            let strict = pairwise_significance(&r, lo).unwrap();
            let loose = pairwise_significance(&r, hi).unwrap();
            for (rs, rl) in strict.iter().zip(&loose) {
                for (cs, cl) in rs.iter().zip(rl) {
                    if *cs != Comparison::Tie {
                        prop_assert_eq!(cs, cl);
                    }
                }
            }
        }

        #[test]
        fn relabeling_permutes_ranks((v, s) in model(), shift in 0usize..7) {
            let d = v.len();
            let perm: Vec<usize> = (0..d).map(|i| (i + shift) % d).collect();
            let pv: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
            let ps: Vec<f64> = perm.iter().map(|&i| s[i]).collect();
            let a = rank_variables(&rel(v, s), 0.05).unwrap();
            let b = rank_variables(&rel(pv, ps), 0.05).unwrap();
            for (new, &old) in perm.iter().enumerate() {
                prop_assert_eq!(b.ranks[new], a.ranks[old]);
            }
            for &r in &a.ranks {
                prop_assert!(r >= 1 && r <= d);
            }
        }
    }
}
