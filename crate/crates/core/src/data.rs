//! Tabular datasets with a binary outcome: loading, validation, CSV
//! round-tripping and seeded train/test splitting.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::stream_rng;

/// Feature matrix (row-major, `n x d`) with a 0/1 outcome vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variable_names: Vec<String>,
    features: Vec<f64>,
    outcome: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset and checks every invariant, including the
    /// `n >= 10 d` guard against degenerate fits.
    pub fn new(variable_names: Vec<String>, features: Vec<f64>, outcome: Vec<f64>) -> Result<Self> {
        let ds = Self::from_parts(variable_names, features, outcome)?;
        let (n, d) = (ds.n_rows(), ds.n_vars());
        if n < 10 * d {
            return Err(Error::Validation(format!(
                "{n} rows is fewer than 10 x {d} variables"
            )));
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] without the minimum-size guard. Used for
    /// evaluation subsets, which may legitimately be small.
    pub fn from_parts(
        variable_names: Vec<String>,
        features: Vec<f64>,
        outcome: Vec<f64>,
    ) -> Result<Self> {
        let d = variable_names.len();
        if d < 2 {
            return Err(Error::Validation(format!(
                "at least 2 variables are required, got {d}"
            )));
        }
        let mut seen = HashSet::new();
        for name in &variable_names {
            if name.trim().is_empty() {
                return Err(Error::Validation("empty variable name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Validation(format!("duplicate variable name `{name}`")));
            }
        }
        if features.len() != outcome.len() * d {
            return Err(Error::DimensionMismatch {
                expected: outcome.len() * d,
                actual: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at row {}, column `{}`",
                pos / d + 1,
                variable_names[pos % d]
            )));
        }
        let bad: Vec<usize> = outcome
            .iter()
            .enumerate()
            .filter(|(_, &y)| y != 0.0 && y != 1.0)
            .map(|(i, _)| i + 1)
            .collect();
        if !bad.is_empty() {
            return Err(Error::Validation(format!(
                "outcome must be 0 or 1; offending rows: {}",
                format_rows(&bad)
            )));
        }
        Ok(Self {
            variable_names,
            features,
            outcome,
        })
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_vars();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_vars())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_vars() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|v| v == name)
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let d = self.n_vars();
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut outcome = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            outcome.push(self.outcome[i]);
        }
        Dataset {
            variable_names: self.variable_names.clone(),
            features,
            outcome,
        }
    }

    /// Writes the dataset as CSV with the outcome as the last column.
    pub fn write_csv(&self, path: impl AsRef<Path>, outcome_column: &str) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.variable_names.iter().map(String::as_str).collect();
        header.push(outcome_column);
        w.write_record(&header)?;
        for (row, y) in self.rows().zip(&self.outcome) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(format!("{}", *y as u8));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn format_rows(rows: &[usize]) -> String {
    const SHOWN: usize = 10;
    let mut s = rows
        .iter()
        .take(SHOWN)
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if rows.len() > SHOWN {
        s.push_str(&format!(" (and {} more)", rows.len() - SHOWN));
    }
    s
}

/// Loads a CSV file with a header row. The outcome column is removed from
/// the features; the remaining column order is preserved. Row numbers in
/// errors count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>, outcome_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let outcome_idx = header
        .iter()
        .position(|h| h == outcome_column)
        .ok_or_else(|| Error::MissingColumn(outcome_column.to_owned()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != outcome_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut outcome = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Parse {
                    row,
                    column: header[c].clone(),
                    message: "blank cell".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: header[c].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if c == outcome_idx {
                outcome.push(v);
            } else {
                features.push(v);
            }
        }
    }
    Dataset::new(names, features, outcome)
}

/// Fraction of rows used for training plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// Number of training rows: `train_fraction * n` rounded half up.
    pub fn train_size(&self, n: usize) -> usize {
        (self.train_fraction * n as f64 + 0.5).floor() as usize
    }
}

/// Seeded shuffle, then the first `train_size` shuffled rows become the
/// training set. Both index sets are returned in ascending order.
pub fn split_indices(n: usize, d: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n_train = spec.train_size(n);
    let n_test = n.saturating_sub(n_train);
    if n_train < d + 1 || n_test < d + 1 {
        return Err(Error::Validation(format!(
            "split of {n} rows gives {n_train} train / {n_test} test rows; each needs at least {} (d + 1)",
            d + 1
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(spec.seed, &[]));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.n_rows(), dataset.n_vars(), spec)?;
    Ok((dataset.select_rows(&train), dataset.select_rows(&test)))
}
