//! Maximum-likelihood logistic regression by Newton/IRLS with step
//! halving, plus the loss, prediction and variance inflation factor
//! diagnostics that the rest of the pipeline builds on.
//!
//! Coefficient vectors always carry the intercept first: `beta[0]` is the
//! intercept and `beta[j + 1]` multiplies variable `j`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{sigmoid, NeumaierSum};

pub const PROB_CLIP: f64 = 1e-12;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;
/// `R^2` at or above `1 - VIF_R2_LIMIT` reports an infinite VIF.
pub const VIF_R2_LIMIT: f64 = 1e-10;

const DEPENDENCE_TOL: f64 = 1e-9;
const MAX_HALVINGS: usize = 50;
const SEPARATION_LOSS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub tol: f64,
    pub max_iter: usize,
    pub iterations: usize,
    pub max_abs_gradient: f64,
    /// Mean training loss at the start of every iteration and at the end.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: String,
    pub variable_names: Vec<String>,
    pub beta: Vec<f64>,
    /// Inverse observed Fisher information, one inner vector per row.
    pub covariance: Vec<Vec<f64>>,
    pub train_loss: f64,
    #[serde(with = "float_or_inf")]
    pub vif: Vec<f64>,
    pub n_obs: usize,
    pub fit: FitInfo,
}

impl FittedModel {
    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let p = self.beta.len();
        DMatrix::from_fn(p, p, |i, j| self.covariance[i][j])
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.beta.len())
            .map(|i| self.covariance[i][i].sqrt())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: FittedModel = serde_json::from_str(s)?;
        let p = model.variable_names.len() + 1;
        if model.family != "logistic" {
            return Err(Error::Config(format!(
                "unsupported model family `{}`",
                model.family
            )));
        }
        if model.beta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: model.beta.len(),
            });
        }
        if model.vif.len() != p - 1 || model.covariance.len() != p || model.covariance.iter().any(|r| r.len() != p) {
            return Err(Error::Config("model file has inconsistent dimensions".into()));
        }
        Ok(model)
    }
}

/// Serializes non-finite VIF sentinels as the string `"inf"`.
mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Repr> = v
            .iter()
            .map(|&x| {
                if x.is_finite() {
                    Repr::Num(x)
                } else {
                    Repr::Text("inf".into())
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Repr>::deserialize(d)?;
        raw.into_iter()
            .map(|r| match r {
                Repr::Num(x) => Ok(x),
                Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Repr::Text(t) => Err(serde::de::Error::custom(format!("bad VIF value `{t}`"))),
            })
            .collect()
    }
}

fn check_len(beta: &[f64], d: usize) -> Result<()> {
    if beta.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            actual: beta.len(),
        });
    }
    Ok(())
}

/// `beta[0] + sum_j beta[j+1] x_j`, summed left to right from zero.
#[inline]
pub(crate) fn linear_predictor(beta: &[f64], row: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (b, x) in beta[1..].iter().zip(row) {
        acc += b * x;
    }
    beta[0] + acc
}

#[inline]
pub(crate) fn clipped_log_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if y == 1.0 {
        -p.ln()
    } else if y == 0.0 {
        -(1.0 - p).ln()
    } else {
        -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
    }
}

pub fn predict_proba(beta: &[f64], row: &[f64]) -> Result<f64> {
    check_len(beta, row.len())?;
    Ok(sigmoid(linear_predictor(beta, row)))
}

/// Mean negative log-likelihood with probabilities clipped to
/// `[1e-12, 1 - 1e-12]`.
pub fn log_loss(beta: &[f64], data: &Dataset) -> Result<f64> {
    check_len(beta, data.n_vars())?;
    Ok(log_loss_unchecked(beta, data))
}

pub(crate) fn log_loss_unchecked(beta: &[f64], data: &Dataset) -> f64 {
    let mut acc = NeumaierSum::new();
    for (row, &y) in data.rows().zip(data.outcome()) {
        acc.add(clipped_log_loss(sigmoid(linear_predictor(beta, row)), y));
    }
    acc.total() / data.n_rows() as f64
}

/// Gradient of the (unclipped) mean log-loss with respect to `beta`.
pub fn log_loss_gradient(beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    check_len(beta, data.n_vars())?;
    let mut acc = vec![NeumaierSum::new(); beta.len()];
    for (row, &y) in data.rows().zip(data.outcome()) {
        let r = sigmoid(linear_predictor(beta, row)) - y;
        acc[0].add(r);
        for (a, x) in acc[1..].iter_mut().zip(row) {
            a.add(r * x);
        }
    }
    let n = data.n_rows() as f64;
    Ok(acc.iter().map(|a| a.total() / n).collect())
}

/// Columns of `[1, X]` that are linear combinations of earlier columns,
/// found by modified Gram-Schmidt with reorthogonalisation.
fn dependent_columns(data: &Dataset) -> Vec<String> {
    let n = data.n_rows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    let columns = std::iter::once(("(intercept)".to_string(), vec![1.0; n])).chain(
        data.variable_names()
            .iter()
            .enumerate()
            .map(|(j, name)| (name.clone(), data.column(j))),
    );
    for (name, col) in columns {
        let norm0 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col;
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= DEPENDENCE_TOL * norm0 {
            dependent.push(name);
        } else {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    dependent
}

struct NewtonState {
    loss: f64,
    gradient: DVector<f64>,
    /// `X^T W X` (sum form, not divided by n).
    information: DMatrix<f64>,
}

fn newton_state(beta: &[f64], data: &Dataset) -> NewtonState {
    let p = beta.len();
    let n = data.n_rows() as f64;
    let mut info = DMatrix::<f64>::zeros(p, p);
    let mut grad = vec![NeumaierSum::new(); p];
    let mut loss = NeumaierSum::new();
    let mut xi = vec![0.0; p];
    xi[0] = 1.0;
    for (row, &y) in data.rows().zip(data.outcome()) {
        xi[1..].copy_from_slice(row);
        let prob = sigmoid(linear_predictor(beta, row));
        loss.add(clipped_log_loss(prob, y));
        let r = prob - y;
        let w = prob * (1.0 - prob);
        for a in 0..p {
            grad[a].add(r * xi[a]);
            let wa = w * xi[a];
            for b in a..p {
                info[(a, b)] += wa * xi[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    NewtonState {
        loss: loss.total() / n,
        gradient: DVector::from_iterator(p, grad.iter().map(|g| g.total() / n)),
        information: info,
    }
}

/// Fits the loss-minimising logistic regression on `train`.
pub fn fit_logistic(train: &Dataset, tol: f64, max_iter: usize) -> Result<FittedModel> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Config(format!(
            "fit needs tol > 0 and max_iter >= 1 (got {tol}, {max_iter})"
        )));
    }
    let dependent = dependent_columns(train);
    if !dependent.is_empty() {
        return Err(Error::SingularDesign { columns: dependent });
    }

    let p = train.n_vars() + 1;
    let n = train.n_rows() as f64;
    let mut beta = vec![0.0; p];
    let mut state = newton_state(&beta, train);
    let mut trace = vec![state.loss];
    let mut iterations = 0;

    loop {
        let max_grad = state.gradient.amax();
        if max_grad <= tol {
            break;
        }
        if iterations == max_iter {
            return Err(Error::NonConvergence(format!(
                "max |gradient| {max_grad:.3e} > {tol:.1e} after {max_iter} iterations"
            )));
        }
        iterations += 1;

        // Newton direction on the mean loss: (I/n) delta = -g
        let chol = (state.information.clone() / n).cholesky().ok_or_else(|| {
            Error::NonConvergence(format!(
                "information matrix lost positive definiteness at iteration {iterations}"
            ))
        })?;
        let step = chol.solve(&(-&state.gradient));

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b + scale * s)
                .collect();
            let cand_loss = log_loss_unchecked(&candidate, train);
            if cand_loss <= state.loss {
                accepted = Some(candidate);
                break;
            }
            scale *= 0.5;
        }
        let Some(next) = accepted else {
            return Err(Error::NonConvergence(format!(
                "step halving failed to reduce the loss at iteration {iterations} (max |gradient| {max_grad:.3e})"
            )));
        };
        beta = next;
        let next_state = newton_state(&beta, train);
        debug_assert!(next_state.loss <= state.loss);
        state = next_state;
        trace.push(state.loss);
    }

    // Complete separation drives the loss to zero; Newton still reaches the
    // gradient tolerance because the gradient decays with the loss.
    if state.loss < SEPARATION_LOSS {
        return Err(Error::NonConvergence(format!(
            "training loss {:.3e} is essentially zero (complete separation)",
            state.loss
        )));
    }

    let info_chol = state.information.clone().cholesky().ok_or_else(|| {
        Error::NonConvergence("observed information is not positive definite at the optimum".into())
    })?;
    let cov = info_chol.inverse();
    let covariance: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| 0.5 * (cov[(i, j)] + cov[(j, i)])).collect())
        .collect();

    let vif = compute_vif(train)?;
    Ok(FittedModel {
        family: "logistic".into(),
        variable_names: train.variable_names().to_vec(),
        beta,
        covariance,
        train_loss: state.loss,
        vif,
        n_obs: train.n_rows(),
        fit: FitInfo {
            tol,
            max_iter,
            iterations,
            max_abs_gradient: state.gradient.amax(),
            loss_trace: trace,
        },
    })
}

/// `VIF_j = 1 / (1 - R^2_j)`, with `R^2_j` from least squares of variable
/// `j` on all other variables plus an intercept. Near-perfect fits are
/// reported as `f64::INFINITY`.
pub fn compute_vif(train: &Dataset) -> Result<Vec<f64>> {
    let d = train.n_vars();
    let n = train.n_rows() as f64;
    let means: Vec<f64> = (0..d)
        .map(|j| train.rows().map(|r| r[j]).collect::<NeumaierSum>().total() / n)
        .collect();
    // centered cross-product matrix
    let mut acc = vec![NeumaierSum::new(); d * d];
    for row in train.rows() {
        for a in 0..d {
            let ca = row[a] - means[a];
            for b in a..d {
                acc[a * d + b].add(ca * (row[b] - means[b]));
            }
        }
    }
    let gram = DMatrix::from_fn(d, d, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        acc[lo * d + hi].total()
    });

    let mut vif = Vec::with_capacity(d);
    for j in 0..d {
        let tss = gram[(j, j)];
        if !(tss > 0.0) {
            return Err(Error::Validation(format!(
                "variable `{}` has zero variance",
                train.variable_names()[j]
            )));
        }
        let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
        let g = DMatrix::from_fn(d - 1, d - 1, |a, b| gram[(others[a], others[b])]);
        let rhs = DVector::from_iterator(d - 1, others.iter().map(|&k| gram[(k, j)]));
        let coef = g
            .svd(true, true)
            .solve(&rhs, 1e-12 * tss.max(1.0))
            .map_err(|e| Error::Numeric(format!("VIF regression failed: {e}")))?;
        let explained = rhs.dot(&coef);
        let r2 = (explained / tss).clamp(0.0, 1.0);
        if r2 >= 1.0 - VIF_R2_LIMIT {
            warn!(
                "variable `{}` is (nearly) a linear combination of the others; VIF reported as infinite",
                train.variable_names()[j]
            );
            vif.push(f64::INFINITY);
        } else {
            vif.push(1.0 / (1.0 - r2));
        }
    }
    Ok(vif)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn synth(n: usize, beta: &[f64], seed: u64) -> Dataset {
        let d = beta.len() - 1;
        let mut rng = stream_rng(seed, &[]);
        let mut x = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let p = sigmoid(linear_predictor(beta, &row));
            y.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
            x.extend(row);
        }
        let names = (1..=d).map(|j| format!("x{j}")).collect();
        Dataset::new(names, x, y).unwrap()
    }

    #[test]
    fn zero_beta_gives_ln2_and_half() {
        let ds = synth(200, &[0.3, 1.0, -1.0], 1);
        assert!((log_loss(&[0.0; 3], &ds).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(predict_proba(&[0.0, 0.0, 0.0], &[3.0, -2.0]).unwrap(), 0.5);
        assert_eq!(predict_proba(&[0.0, 1.0], &[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let ds = synth(100, &[0.0, 1.0, 1.0], 2);
        assert!(matches!(
            log_loss(&[0.0; 2], &ds),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
        assert!(predict_proba(&[0.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn predictions_increase_towards_one() {
        let mut last = 0.0;
        for z in [0.0, 1.0, 5.0, 20.0, 40.0] {
            let p = predict_proba(&[0.0, 1.0, 0.5], &[z, z]).unwrap();
            assert!(p >= last);
            assert!(p <= 1.0);
            last = p;
        }
        assert!(last > 1.0 - 1e-15);
    }

    #[test]
    fn perfect_prediction_is_clipped() {
        // separated toy data evaluated at a huge coefficient
        let names = vec!["a".to_string(), "b".to_string()];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let v = if i % 2 == 0 { -1.0 } else { 1.0 };
            x.extend([v, 0.0]);
            y.push(if v > 0.0 { 1.0 } else { 0.0 });
        }
        let ds = Dataset::new(names, x, y).unwrap();
        let loss = log_loss(&[0.0, 1e3, 0.0], &ds).unwrap();
        assert!(loss > 0.0);
        assert!(loss <= -(1.0 - PROB_CLIP).ln() + 1e-18);
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let ds = synth(300, &[-0.5, 0.8, -0.3, 0.2], 3);
        let mut rng = stream_rng(99, &[]);
        for _ in 0..10 {
            let beta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = log_loss_gradient(&beta, &ds).unwrap();
            for k in 0..4 {
                let h = 1e-5;
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (log_loss(&up, &ds).unwrap() - log_loss(&dn, &ds).unwrap()) / (2.0 * h);
                let rel = (fd - g[k]).abs() / g[k].abs().max(1e-3);
                assert!(rel < 1e-6, "k={k}: fd={fd} analytic={}", g[k]);
            }
        }
    }

    #[test]
    fn fit_converges_with_monotone_loss_and_valid_covariance() {
        let ds = synth(1500, &[-1.0, 0.8, -0.5, 0.0], 4);
        let fit = fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.fit.max_abs_gradient <= DEFAULT_TOL);
        for w in fit.fit.loss_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let p = fit.beta.len();
        for i in 0..p {
            assert!(fit.covariance[i][i] > 0.0);
            for j in 0..p {
                assert!((fit.covariance[i][j] - fit.covariance[j][i]).abs() < 1e-10);
            }
        }
        assert!(fit.covariance_matrix().cholesky().is_some());
        assert!(fit.vif.iter().all(|&v| v >= 1.0));
        assert_eq!(fit.train_loss, log_loss(&fit.beta, &ds).unwrap());
    }

    #[test]
    fn perturbations_never_beat_the_optimum() {
        let ds = synth(1000, &[0.2, 1.0, -0.7], 5);
        let fit = fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let mut rng = stream_rng(6, &[]);
        for _ in 0..100 {
            let b: Vec<f64> = fit
                .beta
                .iter()
                .map(|v| v + 1e-3 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            assert!(log_loss(&b, &ds).unwrap() >= fit.train_loss);
        }
    }

    #[test]
    fn duplicated_column_is_singular() {
        let base = synth(200, &[0.0, 1.0, 0.5], 7);
        let mut x = Vec::new();
        for r in base.rows() {
            x.extend([r[0], r[1], r[0]]);
        }
        let names = vec!["x1".into(), "x2".into(), "x1_copy".into()];
        let ds = Dataset::new(names, x, base.outcome().to_vec()).unwrap();
        match fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["x1_copy".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_column_is_singular_with_intercept() {
        let base = synth(100, &[0.0, 1.0, 0.5], 8);
        let mut x = Vec::new();
        for r in base.rows() {
            x.extend([r[0], 2.0]);
        }
        let ds = Dataset::new(vec!["x1".into(), "k".into()], x, base.outcome().to_vec()).unwrap();
        assert!(matches!(
            fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(Error::SingularDesign { columns }) if columns == vec!["k".to_string()]
        ));
    }

    #[test]
    fn complete_separation_fails_to_converge() {
        let mut rng = stream_rng(9, &[]);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..100 {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            x.extend([a, b]);
            y.push(if a > 0.0 { 1.0 } else { 0.0 });
        }
        let ds = Dataset::new(vec!["a".into(), "b".into()], x, y).unwrap();
        assert!(matches!(
            fit_logistic(&ds, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn vif_of_orthogonal_columns_is_one() {
        // +-1 Hadamard-style columns: exactly orthogonal and centered
        let n = 64;
        let mut x = Vec::new();
        for i in 0..n {
            let a = if i % 2 == 0 { 1.0 } else { -1.0 };
            let b = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let c = if (i / 4) % 2 == 0 { 1.0 } else { -1.0 };
            x.extend([a, b, c]);
        }
        let y = (0..n).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let ds = Dataset::new(vec!["a".into(), "b".into(), "c".into()], x, y).unwrap();
        for v in compute_vif(&ds).unwrap() {
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn vif_matches_closed_form_for_two_variables() {
        // construct columns with sample correlation exactly rho
        let n = 400;
        let mut rng = stream_rng(10, &[]);
        let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let names = vec!["u".into(), "v".into()];
        let mut x = Vec::new();
        for i in 0..n {
            x.extend([u[i], 0.9 * u[i] + (1.0f64 - 0.81).sqrt() * v[i]]);
        }
        let y = (0..n).map(|i| (i % 2) as f64).collect();
        let ds = Dataset::new(names, x, y).unwrap();
        let r = sample_corr(&ds.column(0), &ds.column(1));
        let vif = compute_vif(&ds).unwrap();
        let expected = 1.0 / (1.0 - r * r);
        assert!((vif[0] - expected).abs() < 1e-9 * expected);
        assert!((vif[1] - expected).abs() < 1e-9 * expected);
        assert!((expected - 5.263).abs() < 1.5, "sample rho far from 0.9: {r}");
    }

    fn sample_corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn vif_of_duplicate_is_infinite_and_serializes() {
        let base = synth(100, &[0.0, 1.0, 0.5], 11);
        let mut x = Vec::new();
        for r in base.rows() {
            x.extend([r[0], r[1], r[0]]);
        }
        let ds = Dataset::new(vec!["a".into(), "b".into(), "c".into()], x, base.outcome().to_vec()).unwrap();
        let vif = compute_vif(&ds).unwrap();
        assert!(vif[0].is_infinite() && vif[2].is_infinite());
        assert!(vif[1].is_finite());

        let model = FittedModel {
            family: "logistic".into(),
            variable_names: vec!["a".into(), "b".into(), "c".into()],
            beta: vec![0.0; 4],
            covariance: vec![vec![1.0, 0.0, 0.0, 0.0]; 4],
            train_loss: 0.5,
            vif,
            n_obs: 100,
            fit: FitInfo {
                tol: 1e-8,
                max_iter: 100,
                iterations: 0,
                max_abs_gradient: 0.0,
                loss_trace: vec![],
            },
        };
        let json = model.to_json().unwrap();
        assert!(json.contains("\"inf\""));
        let back = FittedModel::from_json(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn zero_variance_vif_is_an_error() {
        let names = vec!["a".into(), "b".into()];
        let x: Vec<f64> = (0..40).flat_map(|i| [i as f64, 1.0]).collect();
        let y = (0..40).map(|i| (i % 2) as f64).collect();
        let ds = Dataset::new(names, x, y).unwrap();
        assert!(matches!(compute_vif(&ds), Err(Error::Validation(_))));
    }
}
