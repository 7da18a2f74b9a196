//! CSV artifact formats exchanged between pipeline stages. Readers check
//! the header exactly and report expected versus actual columns.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pooling::PooledImportance;
use crate::ranking::{ModelRanking, RankFrequency};
use crate::rashomon::ModelSample;
use crate::reliance::{ModelReliance, PermutationReliance};
use crate::report::{BarDatum, ShapPoint, ViolinSummary};
use crate::shapley::ShapleyEstimate;

pub const IMPORTANCE_COLUMNS: [&str; 5] = ["model_id", "variable", "value", "se", "n_permutations"];
pub const RELIANCE_COLUMNS: [&str; 6] = ["model_id", "variable", "mr_value", "se", "vif_gated", "empirical_loss"];
pub const POOLED_COLUMNS: [&str; 9] = [
    "variable",
    "pooled_mean",
    "pooled_var",
    "tau2",
    "q_stat",
    "pi_low",
    "pi_high",
    "significant",
    "m_models",
];
pub const MODEL_RANK_COLUMNS: [&str; 4] = ["model_id", "variable", "wins", "rank"];
pub const VIC_PERMUTATION_COLUMNS: [&str; 5] = ["model_id", "variable", "mr_minus_one", "se", "n_permutations"];
pub const BAR_COLUMNS: [&str; 5] = ["variable", "pooled_mean", "pi_low", "pi_high", "significant"];
pub const VIOLIN_COLUMNS: [&str; 7] = ["variable", "slice", "lo", "hi", "proportion", "mean_loss", "model_count"];
pub const SHAP_COLUMNS: [&str; 4] = ["instance_id", "variable", "shap_value", "feature_value"];

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn reader(path: &Path, expected: &[String]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let actual: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if actual != expected {
        return Err(Error::Schema {
            file: file_name(path),
            expected: expected.join(", "),
            actual: actual.join(", "),
        });
    }
    Ok(rdr)
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn read_rows<T: DeserializeOwned>(path: &Path, expected: &[&str]) -> Result<Vec<T>> {
    let mut rdr = reader(path, &owned(expected))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        out.push(rec.map_err(|e| Error::Parse {
            row: i + 1,
            column: String::new(),
            message: format!("{}: {e}", file_name(path)),
        })?);
    }
    Ok(out)
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn variable_position(names: &[String], variable: &str, path: &Path) -> Result<usize> {
    names.iter().position(|n| n == variable).ok_or_else(|| {
        Error::Validation(format!(
            "{}: unknown variable `{variable}` (expected one of {})",
            file_name(path),
            names.join(", ")
        ))
    })
}

/// Collects per-(model, variable) rows into dense per-model vectors.
fn group_by_model<R>(
    rows: Vec<R>,
    names: &[String],
    path: &Path,
    key: impl Fn(&R) -> (usize, &str),
) -> Result<BTreeMap<usize, Vec<Option<R>>>> {
    let mut by_model: BTreeMap<usize, Vec<Option<R>>> = BTreeMap::new();
    for r in rows {
        let (id, var) = key(&r);
        let j = variable_position(names, var, path)?;
        let slot = &mut by_model.entry(id).or_insert_with(|| (0..names.len()).map(|_| None).collect())[j];
        if slot.is_some() {
            return Err(Error::Validation(format!(
                "{}: duplicate row for model {id}, variable `{var}`",
                file_name(path)
            )));
        }
        *slot = Some(r);
    }
    for (id, slots) in &by_model {
        if let Some(j) = slots.iter().position(Option::is_none) {
            return Err(Error::Validation(format!(
                "{}: model {id} has no row for variable `{}`",
                file_name(path),
                names[j]
            )));
        }
    }
    Ok(by_model)
}

// models.csv

pub fn models_columns(d: usize) -> Vec<String> {
    let mut cols = owned(&["model_id", "k_multiplier", "empirical_loss"]);
    cols.extend((0..=d).map(|j| format!("beta_{j}")));
    cols
}

pub fn write_models(path: impl AsRef<Path>, models: &[ModelSample]) -> Result<()> {
    let path = path.as_ref();
    let d = models.first().map_or(0, |m| m.beta.len() - 1);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(models_columns(d))?;
    for (id, m) in models.iter().enumerate() {
        if m.beta.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                actual: m.beta.len(),
            });
        }
        let mut rec = vec![id.to_string(), m.k_multiplier.to_string(), m.empirical_loss.to_string()];
        rec.extend(m.beta.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads models.csv for a model with `d` predictors. Model ids must run
/// 0, 1, 2, ... in file order.
pub fn read_models(path: impl AsRef<Path>, d: usize) -> Result<Vec<ModelSample>> {
    let path = path.as_ref();
    let mut rdr = reader(path, &models_columns(d))?;
    let header = models_columns(d);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec[c].parse().map_err(|_| Error::Parse {
                row: i + 1,
                column: header[c].clone(),
                message: format!("`{}` is not a number", &rec[c]),
            })
        };
        let id: usize = rec[0].parse().map_err(|_| Error::Parse {
            row: i + 1,
            column: "model_id".into(),
            message: format!("`{}` is not a model id", &rec[0]),
        })?;
        if id != i {
            return Err(Error::Validation(format!(
                "{}: model ids must be consecutive from 0; row {} has {id}",
                file_name(path),
                i + 1
            )));
        }
        out.push(ModelSample {
            k_multiplier: num(1)?,
            empirical_loss: num(2)?,
            beta: (3..header.len()).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

// importance.csv

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub model_id: usize,
    pub variable: String,
    pub value: f64,
    pub se: f64,
    pub n_permutations: usize,
}

pub fn write_importance(path: impl AsRef<Path>, names: &[String], estimates: &[(usize, ShapleyEstimate)]) -> Result<()> {
    let rows = estimates.iter().flat_map(|(id, e)| {
        names.iter().enumerate().map(move |(j, v)| ImportanceRow {
            model_id: *id,
            variable: v.clone(),
            value: e.values[j],
            se: e.se[j],
            n_permutations: e.n_permutations,
        })
    });
    write_rows(path.as_ref(), rows, &IMPORTANCE_COLUMNS)
}

/// Per-model `(values, se, n_permutations)` in `names` order.
pub fn read_importance(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<(usize, Vec<f64>, Vec<f64>, usize)>> {
    let path = path.as_ref();
    let rows: Vec<ImportanceRow> = read_rows(path, &IMPORTANCE_COLUMNS)?;
    let grouped = group_by_model(rows, names, path, |r| (r.model_id, r.variable.as_str()))?;
    Ok(grouped
        .into_iter()
        .map(|(id, slots)| {
            let rows: Vec<ImportanceRow> = slots.into_iter().flatten().collect();
            (
                id,
                rows.iter().map(|r| r.value).collect(),
                rows.iter().map(|r| r.se).collect(),
                rows[0].n_permutations,
            )
        })
        .collect())
}

// reliance.csv

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RelianceRow {
    model_id: usize,
    variable: String,
    mr_value: f64,
    se: f64,
    vif_gated: bool,
    empirical_loss: f64,
}

pub fn write_reliance(path: impl AsRef<Path>, names: &[String], reliances: &[ModelReliance]) -> Result<()> {
    let rows = reliances.iter().flat_map(|r| {
        names.iter().enumerate().map(move |(j, v)| RelianceRow {
            model_id: r.model_id,
            variable: v.clone(),
            mr_value: r.values[j],
            se: r.se[j],
            vif_gated: r.vif_gated[j],
            empirical_loss: r.empirical_loss,
        })
    });
    write_rows(path.as_ref(), rows, &RELIANCE_COLUMNS)
}

pub fn read_reliance(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<ModelReliance>> {
    let path = path.as_ref();
    let rows: Vec<RelianceRow> = read_rows(path, &RELIANCE_COLUMNS)?;
    let grouped = group_by_model(rows, names, path, |r| (r.model_id, r.variable.as_str()))?;
    Ok(grouped
        .into_iter()
        .map(|(id, slots)| {
            let rows: Vec<RelianceRow> = slots.into_iter().flatten().collect();
            ModelReliance {
                model_id: id,
                values: rows.iter().map(|r| r.mr_value).collect(),
                se: rows.iter().map(|r| r.se).collect(),
                vif_gated: rows.iter().map(|r| r.vif_gated).collect(),
                empirical_loss: rows[0].empirical_loss,
            }
        })
        .collect())
}

// pooled.csv

pub fn write_pooled(path: impl AsRef<Path>, pooled: &[PooledImportance]) -> Result<()> {
    write_rows(path.as_ref(), pooled, &POOLED_COLUMNS)
}

pub fn read_pooled(path: impl AsRef<Path>) -> Result<Vec<PooledImportance>> {
    read_rows(path.as_ref(), &POOLED_COLUMNS)
}

// rank_frequency.csv and model_ranks.csv

pub fn write_rank_frequency(path: impl AsRef<Path>, freq: &RankFrequency) -> Result<()> {
    let path = path.as_ref();
    let d = freq.variables.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["variable".to_string()];
    header.extend((1..=d).map(|r| format!("rank_{r}")));
    w.write_record(&header)?;
    for (v, counts) in freq.variables.iter().zip(&freq.counts) {
        let mut rec = vec![v.clone()];
        rec.extend(counts.iter().map(usize::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelRankRow {
    model_id: usize,
    variable: String,
    wins: usize,
    rank: usize,
}

pub fn write_model_ranks(path: impl AsRef<Path>, names: &[String], rankings: &[ModelRanking]) -> Result<()> {
    let rows = rankings.iter().flat_map(|r| {
        names.iter().enumerate().map(move |(j, v)| ModelRankRow {
            model_id: r.model_id,
            variable: v.clone(),
            wins: r.wins[j],
            rank: r.ranks[j],
        })
    });
    write_rows(path.as_ref(), rows, &MODEL_RANK_COLUMNS)
}

pub fn read_model_ranks(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<ModelRanking>> {
    let path = path.as_ref();
    let rows: Vec<ModelRankRow> = read_rows(path, &MODEL_RANK_COLUMNS)?;
    let grouped = group_by_model(rows, names, path, |r| (r.model_id, r.variable.as_str()))?;
    Ok(grouped
        .into_iter()
        .map(|(id, slots)| {
            let rows: Vec<ModelRankRow> = slots.into_iter().flatten().collect();
            ModelRanking {
                model_id: id,
                wins: rows.iter().map(|r| r.wins).collect(),
                ranks: rows.iter().map(|r| r.rank).collect(),
            }
        })
        .collect())
}

// vic_permutation.csv

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VicPermutationRow {
    model_id: usize,
    variable: String,
    mr_minus_one: f64,
    se: f64,
    n_permutations: usize,
}

pub fn write_vic_permutation(path: impl AsRef<Path>, names: &[String], rel: &[PermutationReliance]) -> Result<()> {
    let rows = rel.iter().flat_map(|r| {
        names.iter().enumerate().map(move |(j, v)| VicPermutationRow {
            model_id: r.model_id,
            variable: v.clone(),
            mr_minus_one: r.values_minus_one[j],
            se: r.se[j],
            n_permutations: r.n_permutations,
        })
    });
    write_rows(path.as_ref(), rows, &VIC_PERMUTATION_COLUMNS)
}

// plot side-cars

pub fn write_bar_csv(path: impl AsRef<Path>, bars: &[BarDatum]) -> Result<()> {
    write_rows(path.as_ref(), bars, &BAR_COLUMNS)
}

#[derive(Serialize)]
struct ViolinRow<'a> {
    variable: &'a str,
    slice: usize,
    lo: f64,
    hi: f64,
    proportion: f64,
    mean_loss: f64,
    model_count: usize,
}

pub fn write_violin_csv(path: impl AsRef<Path>, summaries: &[ViolinSummary]) -> Result<()> {
    let rows = summaries.iter().flat_map(|s| {
        s.slices.iter().enumerate().map(move |(k, sl)| ViolinRow {
            variable: &s.variable,
            slice: k,
            lo: sl.lo,
            hi: sl.hi,
            proportion: sl.proportion,
            mean_loss: sl.mean_loss,
            model_count: sl.model_count,
        })
    });
    write_rows(path.as_ref(), rows, &VIOLIN_COLUMNS)
}

pub fn write_shap_summary_csv(path: impl AsRef<Path>, points: &[ShapPoint]) -> Result<()> {
    write_rows(path.as_ref(), points, &SHAP_COLUMNS)
}

pub fn read_shap_summary_csv(path: impl AsRef<Path>) -> Result<Vec<ShapPoint>> {
    read_rows(path.as_ref(), &SHAP_COLUMNS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn models_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("models.csv");
        let models = vec![
            ModelSample { beta: vec![0.1, -1.0 / 3.0, 2e-17], empirical_loss: 0.612_345_678_9, k_multiplier: 7.25 },
            ModelSample { beta: vec![1.0, 0.0, -0.0], empirical_loss: 0.6, k_multiplier: 0.5 },
        ];
        write_models(&p, &models).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("model_id,k_multiplier,empirical_loss,beta_0,beta_1,beta_2\n"));
        assert_eq!(read_models(&p, 2).unwrap(), models);
        match read_models(&p, 3) {
            Err(Error::Schema { expected, actual, .. }) => {
                assert!(expected.ends_with("beta_3"));
                assert!(actual.ends_with("beta_2"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_error_names_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("reliance.csv");
        std::fs::write(&p, "model_id,variable,value\n0,a,1\n").unwrap();
        let err = read_reliance(&p, &names()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Schema { .. }));
        assert!(msg.contains("mr_value"), "{msg}");
        assert!(msg.contains("model_id, variable, value"), "{msg}");
    }

    #[test]
    fn reliance_grouping_checks_coverage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("reliance.csv");
        let rel = vec![ModelReliance {
            model_id: 4,
            values: vec![0.5, -0.25],
            se: vec![0.1, 0.2],
            vif_gated: vec![true, false],
            empirical_loss: 0.61,
        }];
        write_reliance(&p, &names(), &rel).unwrap();
        assert_eq!(read_reliance(&p, &names()).unwrap(), rel);

        std::fs::write(&p, "model_id,variable,mr_value,se,vif_gated,empirical_loss\n0,a,1,0.1,false,0.6\n").unwrap();
        assert!(read_reliance(&p, &names()).is_err());
        std::fs::write(&p, "model_id,variable,mr_value,se,vif_gated,empirical_loss\n0,zz,1,0.1,false,0.6\n").unwrap();
        assert!(read_reliance(&p, &names()).is_err());
    }

    #[test]
    fn pooled_header_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pooled.csv");
        let pooled = vec![PooledImportance {
            variable: "a".into(),
            pooled_mean: 2.0,
            pooled_var: 1.0 / 3.0,
            tau2: 0.75,
            q_stat: 8.0,
            pi_low: -11.2,
            pi_high: 15.2,
            significant: false,
            m_models: 3,
        }];
        write_pooled(&p, &pooled).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), POOLED_COLUMNS.join(","));
        assert_eq!(read_pooled(&p).unwrap(), pooled);
    }
}
