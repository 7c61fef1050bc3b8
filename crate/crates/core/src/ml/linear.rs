//! Linear models: least squares (plain and ridge), lasso, logistic
//! regression, and the perceptron / SGD-SVM online classifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_features, check_targets, Dense, MlError, Model, Result};
use crate::backend;
use crate::linalg::{self, LinalgError};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Fitted weights (`d×1`) and intercept.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Matrix,
    pub bias: f32,
}

impl LinearModel {
    fn new(weights: &[f64], bias: f64) -> Result<Self> {
        let weights = Matrix::from_vec(weights.len(), 1, weights.iter().map(|&v| v as f32).collect())?;
        Ok(LinearModel { weights, bias: bias as f32 })
    }

    pub fn n_features(&self) -> usize {
        self.weights.rows()
    }

    /// Raw scores `X·w + b` as an `n×1` matrix.
    pub fn decision_function(&self, x: &Matrix) -> Result<Matrix> {
        check_features(self.n_features(), x)?;
        let xw = x.matmul(&self.weights)?;
        Ok(xw.add(&Matrix::filled(x.rows(), 1, self.bias)?)?)
    }

    pub fn weight_vec(&self) -> Vec<f64> {
        self.weights.to_f64_vec()
    }
}

fn centered_problem(x: &Matrix, y: &Matrix) -> Result<(Dense, Vec<f64>, Vec<f64>, f64)> {
    check_targets(x, y)?;
    let xd = Dense::from_matrix(x);
    let x_mean = xd.column_means();
    let yv = y.to_f64_vec();
    let y_mean = yv.iter().sum::<f64>() / yv.len() as f64;
    let yc = yv.iter().map(|v| v - y_mean).collect();
    Ok((xd.centered(&x_mean), x_mean, yc, y_mean))
}

fn intercept(x_mean: &[f64], w: &[f64], y_mean: f64) -> f64 {
    y_mean - x_mean.iter().zip(w).map(|(m, w)| m * w).sum::<f64>()
}

macro_rules! model_impl {
    ($ty:ident, $tag:literal, $params:ty, $state:ty) => {
        impl Model for $ty {
            const TYPE: &'static str = $tag;
            type Params = $params;
            type State = $state;

            fn params(&self) -> &$params {
                &self.params
            }

            fn state(&self) -> Option<&$state> {
                self.state.as_ref()
            }

            fn from_parts(params: $params, state: $state) -> Result<Self> {
                Ok($ty { params, state: Some(state) })
            }
        }
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearKind {
    Ols,
    Ridge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRegressionParams {
    pub kind: LinearKind,
    pub lambda: f64,
}

/// Least squares with an unpenalized intercept, minimizing
/// `‖Xw + b − y‖² + λ‖w‖²` through the normal equations.
#[derive(Clone, Debug)]
pub struct LinearRegression {
    params: LinearRegressionParams,
    state: Option<LinearModel>,
}

model_impl!(LinearRegression, "linear_regression", LinearRegressionParams, LinearModel);

impl LinearRegression {
    pub fn ols() -> Self {
        LinearRegression { params: LinearRegressionParams { kind: LinearKind::Ols, lambda: 0.0 }, state: None }
    }

    pub fn ridge(lambda: f64) -> Self {
        LinearRegression { params: LinearRegressionParams { kind: LinearKind::Ridge, lambda }, state: None }
    }

    pub fn fit(&mut self, x: &Matrix, y: &Matrix) -> Result<&mut Self> {
        let lambda = match self.params.kind {
            LinearKind::Ols => 0.0,
            LinearKind::Ridge => self.params.lambda,
        };
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(MlError::Parameter(format!("lambda must be a finite non-negative number, got {lambda}")));
        }
        let (xc, x_mean, yc, y_mean) = centered_problem(x, y)?;
        let d = xc.cols;
        let mut gram = xc.gram(1.0);
        for j in 0..d {
            gram[j * d + j] += lambda;
        }
        let rhs = xc.cross(&Dense { rows: yc.len(), cols: 1, data: yc }, 1.0);
        let w = linalg::solve(&gram, d, &rhs, 1).map_err(|e| match e {
            LinalgError::Singular { .. } if lambda == 0.0 => MlError::Singular(format!(
                "normal matrix is singular ({e}); use ridge regression with lambda > 0"
            )),
            other => other.into(),
        })?;
        self.state = Some(LinearModel::new(&w, intercept(&x_mean, &w, y_mean))?);
        Ok(self)
    }

    pub fn model(&self) -> Result<&LinearModel> {
        self.state.as_ref().ok_or(MlError::NotFitted("LinearRegression"))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.model()?.decision_function(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    pub lambda: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

/// L1-penalized least squares, `½‖Xw + b − y‖² + λ‖w‖₁`, solved by cyclic
/// coordinate descent. Stops when no coordinate moves by `tol` or more in a
/// sweep, or after `max_sweeps` sweeps.
#[derive(Clone, Debug)]
pub struct Lasso {
    params: LassoParams,
    state: Option<LinearModel>,
}

model_impl!(Lasso, "lasso", LassoParams, LinearModel);

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl Lasso {
    pub fn new(lambda: f64) -> Self {
        Lasso { params: LassoParams { lambda, max_sweeps: 1000, tol: 1e-6 }, state: None }
    }

    pub fn with_params(params: LassoParams) -> Self {
        Lasso { params, state: None }
    }

    pub fn fit(&mut self, x: &Matrix, y: &Matrix) -> Result<&mut Self> {
        let LassoParams { lambda, max_sweeps, tol } = self.params;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(MlError::Parameter(format!("lasso lambda must be positive, got {lambda}")));
        }
        let (xc, x_mean, mut resid, y_mean) = centered_problem(x, y)?;
        let (n, d) = (xc.rows, xc.cols);
        let columns: Vec<Vec<f64>> = (0..d).map(|j| (0..n).map(|i| xc.data[i * d + j]).collect()).collect();
        let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        let mut w = vec![0.0; d];
        for _ in 0..max_sweeps {
            let mut max_delta = 0.0f64;
            for j in 0..d {
                if norms[j] == 0.0 {
                    continue;
                }
                let col = &columns[j];
                let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() + norms[j] * w[j];
                let updated = soft_threshold(rho, lambda) / norms[j];
                let delta = updated - w[j];
                if delta != 0.0 {
                    resid.iter_mut().zip(col).for_each(|(r, a)| *r -= delta * a);
                    w[j] = updated;
                }
                max_delta = max_delta.max(delta.abs());
            }
            if max_delta < tol {
                break;
            }
        }
        self.state = Some(LinearModel::new(&w, intercept(&x_mean, &w, y_mean))?);
        Ok(self)
    }

    pub fn model(&self) -> Result<&LinearModel> {
        self.state.as_ref().ok_or(MlError::NotFitted("Lasso"))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.model()?.decision_function(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { learning_rate: 0.1, epochs: 500 }
    }
}

/// Binary logistic regression trained by full-batch gradient descent on
/// the mean negative log-likelihood, starting from zero weights.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    params: LogisticParams,
    state: Option<LinearModel>,
}

model_impl!(LogisticRegression, "logistic_regression", LogisticParams, LinearModel);

impl Default for LogisticRegression {
    fn default() -> Self {
        Self::new(LogisticParams::default())
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn logistic_objective(x: &Dense, y: &[f64], w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
    let n = x.rows as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; x.cols];
    let mut gb = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let row = x.row(i);
        let z = dot(row, w) + b;
        loss += if yi > 0.5 { softplus(-z) } else { softplus(z) };
        let err = sigmoid(z) - yi;
        gw.iter_mut().zip(row).for_each(|(g, v)| *g += err * v);
        gb += err;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (loss / n, gw, gb / n)
}

/// Mean negative log-likelihood of `{0,1}` labels and its gradient with
/// respect to the weights and the intercept.
pub fn logistic_loss_grad(x: &Matrix, y: &Matrix, w: &[f64], b: f64) -> Result<(f64, Vec<f64>, f64)> {
    check_targets(x, y)?;
    check_features(w.len(), x)?;
    Ok(logistic_objective(&Dense::from_matrix(x), &y.to_f64_vec(), w, b))
}

fn binary_labels(y: &Matrix) -> Result<Vec<f64>> {
    let v = y.to_f64_vec();
    if let Some(bad) = v.iter().find(|&&l| l != 0.0 && l != 1.0) {
        return Err(MlError::Label(format!("logistic regression expects labels in {{0, 1}}, found {bad}")));
    }
    Ok(v)
}

impl LogisticRegression {
    pub fn new(params: LogisticParams) -> Self {
        LogisticRegression { params, state: None }
    }

    pub fn fit(&mut self, x: &Matrix, y: &Matrix) -> Result<&mut Self> {
        check_targets(x, y)?;
        let labels = binary_labels(y)?;
        let lr = self.params.learning_rate;
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(MlError::Parameter(format!("learning rate must be positive, got {lr}")));
        }
        let xd = Dense::from_matrix(x);
        let mut w = vec![0.0; xd.cols];
        let mut b = 0.0;
        for _ in 0..self.params.epochs {
            let (_, gw, gb) = logistic_objective(&xd, &labels, &w, b);
            w.iter_mut().zip(&gw).for_each(|(w, g)| *w -= lr * g);
            b -= lr * gb;
        }
        self.state = Some(LinearModel::new(&w, b)?);
        Ok(self)
    }

    pub fn model(&self) -> Result<&LinearModel> {
        self.state.as_ref().ok_or(MlError::NotFitted("LogisticRegression"))
    }

    /// Probability of class 1 for each sample, `σ(Xw + b)`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let scores = self.model()?.decision_function(x)?;
        let sigmoid = backend::current().map_generator("1.0 / (exp(-a[i]) + 1.0)", 1).map_err(crate::matrix::MatrixError::from)?;
        Ok(sigmoid.call(&scores)?)
    }

    /// Class labels in `{0, 1}` at the 0.5 probability threshold.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let p = self.predict_proba(x)?.to_vec();
        Ok(Matrix::from_vec(p.len(), 1, p.iter().map(|&v| if v >= 0.5 { 1.0 } else { 0.0 }).collect())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SgdAlgorithm {
    Perceptron,
    Sgdsvm,
}

impl FromStr for SgdAlgorithm {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perceptron" => Ok(SgdAlgorithm::Perceptron),
            "sgdsvm" => Ok(SgdAlgorithm::Sgdsvm),
            other => Err(MlError::Parameter(format!(
                "unknown SGD algorithm {other:?}; expected \"perceptron\" or \"sgdsvm\""
            ))),
        }
    }
}

impl fmt::Display for SgdAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SgdAlgorithm::Perceptron => "perceptron",
            SgdAlgorithm::Sgdsvm => "sgdsvm",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    pub algorithm: SgdAlgorithm,
    /// Return the running average of all iterates instead of the last one.
    pub aver: bool,
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            algorithm: SgdAlgorithm::Perceptron,
            aver: false,
            lambda: 0.0,
            epochs: 100,
            learning_rate: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SgdState {
    pub model: LinearModel,
    /// Misclassified samples encountered during each epoch.
    pub mistakes: Vec<usize>,
    /// `‖w‖` of the returned iterate at the end of each epoch.
    pub weight_norms: Vec<f64>,
}

/// Online binary linear classifier. Labels may be given as `{−1, +1}` or
/// `{0, 1}` (0 is read as −1).
///
/// * perceptron: on a non-positive margin, `w += η·y·x`, `b += η·y`; stops
///   early after an epoch without mistakes.
/// * sgdsvm: step size `η_t = η / (1 + η·λ·(t + 1))`, shrink `w ← (1 − η_t·λ)·w`,
///   then a hinge subgradient step when the margin is below 1.
///
/// A positive `lambda` applies the same shrinkage to the perceptron.
/// Samples are visited in a fresh seeded order every epoch.
#[derive(Clone, Debug)]
pub struct Sgd {
    params: SgdParams,
    state: Option<SgdState>,
}

model_impl!(Sgd, "sgd", SgdParams, SgdState);

/// Maps `{−1, +1}` or `{0, 1}` labels to `±1`.
pub(crate) fn signed_labels(y: &Matrix) -> Result<Vec<f64>> {
    let v = y.to_f64_vec();
    let has_neg = v.contains(&-1.0);
    let has_zero = v.contains(&0.0);
    if has_neg && has_zero {
        return Err(MlError::Label("labels mix 0 and -1; use {-1, +1} or {0, 1}".into()));
    }
    if let Some(bad) = v.iter().find(|&&l| l != -1.0 && l != 0.0 && l != 1.0) {
        return Err(MlError::Label(format!("binary labels expected, found {bad}")));
    }
    Ok(v.iter().map(|&l| if l > 0.0 { 1.0 } else { -1.0 }).collect())
}

/// Regularized empirical objective minimized by [`Sgd`] and one
/// subgradient (zero at hinge kinks): `λ/2·‖w‖² + mean(loss)`, with loss
/// `max(0, −y·f)` for the perceptron and `max(0, 1 − y·f)` for sgdsvm.
pub fn sgd_objective(
    algorithm: SgdAlgorithm,
    x: &Matrix,
    y: &Matrix,
    lambda: f64,
    w: &[f64],
    b: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    check_targets(x, y)?;
    check_features(w.len(), x)?;
    let labels = signed_labels(y)?;
    let xd = Dense::from_matrix(x);
    let margin_target = match algorithm {
        SgdAlgorithm::Perceptron => 0.0,
        SgdAlgorithm::Sgdsvm => 1.0,
    };
    let n = xd.rows as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; xd.cols];
    let mut gb = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        let row = xd.row(i);
        let slack = margin_target - yi * (dot(row, w) + b);
        if slack > 0.0 {
            loss += slack;
            gw.iter_mut().zip(row).for_each(|(g, v)| *g -= yi * v);
            gb -= yi;
        }
    }
    let reg = 0.5 * lambda * dot(w, w);
    gw.iter_mut().zip(w).for_each(|(g, w)| *g = *g / n + lambda * w);
    Ok((loss / n + reg, gw, gb / n))
}

impl Sgd {
    pub fn new(params: SgdParams) -> Self {
        Sgd { params, state: None }
    }

    /// Builds from an algorithm tag (`"perceptron"` or `"sgdsvm"`), keeping
    /// the remaining defaults.
    pub fn with_algorithm(tag: &str, aver: bool, lambda: f64) -> Result<Self> {
        Ok(Sgd::new(SgdParams { algorithm: tag.parse()?, aver, lambda, ..SgdParams::default() }))
    }

    pub fn params_mut(&mut self) -> &mut SgdParams {
        &mut self.params
    }

    pub fn fit(&mut self, x: &Matrix, y: &Matrix) -> Result<&mut Self> {
        check_targets(x, y)?;
        let labels = signed_labels(y)?;
        let SgdParams { algorithm, aver, lambda, epochs, learning_rate, seed } = self.params;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(MlError::Parameter(format!("lambda must be non-negative, got {lambda}")));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(MlError::Parameter(format!("learning rate must be positive, got {learning_rate}")));
        }
        let xd = Dense::from_matrix(x);
        let d = xd.cols;
        let mut rng = SplitMix64::new(seed);
        let mut order: Vec<usize> = (0..xd.rows).collect();
        let (mut w, mut b) = (vec![0.0; d], 0.0);
        let (mut avg_w, mut avg_b) = (vec![0.0; d], 0.0);
        let mut steps = 0usize;
        let mut mistakes = Vec::new();
        let mut weight_norms = Vec::new();
        for _ in 0..epochs {
            rng.shuffle(&mut order);
            let mut wrong = 0;
            for &i in &order {
                let row = xd.row(i);
                let yi = labels[i];
                let margin = yi * (dot(row, &w) + b);
                if margin <= 0.0 {
                    wrong += 1;
                }
                let (eta, threshold) = match algorithm {
                    SgdAlgorithm::Perceptron => (learning_rate, 0.0),
                    SgdAlgorithm::Sgdsvm => {
                        (learning_rate / (1.0 + learning_rate * lambda * (steps + 1) as f64), 1.0)
                    }
                };
                if lambda > 0.0 {
                    let shrink = (1.0 - eta * lambda).max(0.0);
                    w.iter_mut().for_each(|v| *v *= shrink);
                }
                let update = match algorithm {
                    SgdAlgorithm::Perceptron => margin <= threshold,
                    SgdAlgorithm::Sgdsvm => margin < threshold,
                };
                if update {
                    w.iter_mut().zip(row).for_each(|(v, x)| *v += eta * yi * x);
                    b += eta * yi;
                }
                steps += 1;
                if aver {
                    let k = steps as f64;
                    avg_w.iter_mut().zip(&w).for_each(|(a, v)| *a += (v - *a) / k);
                    avg_b += (b - avg_b) / k;
                }
            }
            mistakes.push(wrong);
            let current = if aver { &avg_w } else { &w };
            weight_norms.push(dot(current, current).sqrt());
            if algorithm == SgdAlgorithm::Perceptron && wrong == 0 {
                break;
            }
        }
        let model = if aver { LinearModel::new(&avg_w, avg_b)? } else { LinearModel::new(&w, b)? };
        self.state = Some(SgdState { model, mistakes, weight_norms });
        Ok(self)
    }

    pub fn fitted(&self) -> Result<&SgdState> {
        self.state.as_ref().ok_or(MlError::NotFitted("Sgd"))
    }

    pub fn model(&self) -> Result<&LinearModel> {
        Ok(&self.fitted()?.model)
    }

    /// Raw scores `X·w + b`; the sign is the predicted class.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.model()?.decision_function(x)
    }

    /// Predicted classes in `{−1, +1}` (a zero score counts as +1).
    pub fn predict_labels(&self, x: &Matrix) -> Result<Matrix> {
        let s = self.predict(x)?.to_vec();
        Ok(Matrix::from_vec(s.len(), 1, s.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect())?)
    }
}
