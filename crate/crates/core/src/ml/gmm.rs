//! Gaussian mixture models with full covariances, fitted by EM.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kmeans::{KMeans, KMeansParams};
use super::{check_features, check_finite, Dense, MlError, Model, Result};
use crate::linalg;
use crate::matrix::Matrix;

/// Smallest eigenvalue allowed in a component covariance.
pub const COVARIANCE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub n_components: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Seed for the k-means initialization.
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GmmState {
    /// `k×d` component means.
    pub means: Matrix,
    /// One `d×d` covariance per component.
    pub covariances: Vec<Matrix>,
    /// `k×1` mixing weights.
    pub weights: Matrix,
    /// Mean per-sample log-likelihood after each EM iteration.
    pub log_likelihood_history: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug)]
struct Component {
    mean: Vec<f64>,
    chol: Vec<f64>,
    /// `log w − ½(d·log 2π + log|Σ|)`.
    log_norm: f64,
}

impl Component {
    fn new(weight: f64, mean: Vec<f64>, cov: &mut [f64], d: usize) -> Self {
        regularize(cov, d);
        let chol = loop {
            match linalg::cholesky(cov, d) {
                Some(l) => break l,
                None => (0..d).for_each(|j| cov[j * d + j] += COVARIANCE_FLOOR),
            }
        };
        let log_det = linalg::cholesky_log_det(&chol, d);
        let log_norm = weight.ln() - 0.5 * (d as f64 * (2.0 * PI).ln() + log_det);
        Component { mean, chol, log_norm }
    }

    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        // Forward substitution: z = L⁻¹(x − μ).
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * scratch[j];
            }
            scratch[i] = s / self.chol[i * d + i];
        }
        let maha: f64 = scratch[..d].iter().map(|z| z * z).sum();
        self.log_norm - 0.5 * maha
    }
}

/// Raises the spectrum of a symmetric matrix so that its smallest
/// eigenvalue is at least [`COVARIANCE_FLOOR`].
fn regularize(cov: &mut [f64], d: usize) {
    let min_eig = linalg::symmetric_eigen(cov, d).values.last().copied().unwrap_or(0.0);
    if min_eig < COVARIANCE_FLOOR {
        let shift = COVARIANCE_FLOOR - min_eig;
        (0..d).for_each(|j| cov[j * d + j] += shift);
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mixture of full-covariance Gaussians. Initialized from a seeded k-means
/// partition, then alternates E-steps (responsibilities via log-sum-exp)
/// and closed-form M-steps until the mean log-likelihood improves by less
/// than `tol` or `max_iter` iterations have run. Covariances whose smallest
/// eigenvalue falls below [`COVARIANCE_FLOOR`] are shifted up to it.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    params: GmmParams,
    state: Option<GmmState>,
    components: Vec<Component>,
}

impl Model for GaussianMixture {
    const TYPE: &'static str = "gmm";
    type Params = GmmParams;
    type State = GmmState;

    fn params(&self) -> &GmmParams {
        &self.params
    }

    fn state(&self) -> Option<&GmmState> {
        self.state.as_ref()
    }

    fn from_parts(params: GmmParams, state: GmmState) -> Result<Self> {
        let k = state.means.rows();
        let d = state.means.cols();
        if state.covariances.len() != k
            || state.weights.shape() != (k, 1)
            || state.covariances.iter().any(|c| c.shape() != (d, d))
        {
            return Err(MlError::Serialization("inconsistent mixture dimensions".into()));
        }
        let components = components_from_state(&state);
        Ok(GaussianMixture { params, state: Some(state), components })
    }
}

fn components_from_state(state: &GmmState) -> Vec<Component> {
    let d = state.means.cols();
    let means = Dense::from_matrix(&state.means);
    let weights = state.weights.to_f64_vec();
    state
        .covariances
        .iter()
        .enumerate()
        .map(|(c, cov)| Component::new(weights[c], means.row(c).to_vec(), &mut cov.to_f64_vec(), d))
        .collect()
}

impl Default for GaussianMixture {
    fn default() -> Self {
        GaussianMixture::new(2, 100, 1e-7)
    }
}

struct Fit {
    weights: Vec<f64>,
    means: Dense,
    covs: Vec<Vec<f64>>,
}

impl Fit {
    fn components(&self) -> Vec<Component> {
        let d = self.means.cols;
        (0..self.weights.len())
            .map(|c| Component::new(self.weights[c], self.means.row(c).to_vec(), &mut self.covs[c].clone(), d))
            .collect()
    }

    /// Closed-form maximization for responsibilities `resp` (`n×k`).
    /// Components that receive no mass keep their previous parameters.
    fn m_step(&mut self, data: &Dense, resp: &Dense) {
        let (n, d, k) = (data.rows, data.cols, resp.cols);
        for c in 0..k {
            let nk: f64 = (0..n).map(|i| resp.data[i * k + c]).sum();
            if nk < 1e-10 {
                self.weights[c] = 1e-300;
                continue;
            }
            self.weights[c] = nk / n as f64;
            let mut mean = vec![0.0; d];
            for i in 0..n {
                let r = resp.data[i * k + c];
                mean.iter_mut().zip(data.row(i)).for_each(|(m, v)| *m += r * v);
            }
            mean.iter_mut().for_each(|m| *m /= nk);
            let mut cov = vec![0.0; d * d];
            let mut diff = vec![0.0; d];
            for i in 0..n {
                let r = resp.data[i * k + c];
                diff.iter_mut().zip(data.row(i)).zip(&mean).for_each(|((t, v), m)| *t = v - m);
                for a in 0..d {
                    for b in 0..=a {
                        cov[a * d + b] += r * diff[a] * diff[b];
                    }
                }
            }
            for a in 0..d {
                for b in 0..=a {
                    let v = cov[a * d + b] / nk;
                    cov[a * d + b] = v;
                    cov[b * d + a] = v;
                }
            }
            self.means.data[c * d..(c + 1) * d].copy_from_slice(&mean);
            self.covs[c] = cov;
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
    }
}

/// Fills `resp` with posterior component probabilities and returns the
/// mean log-likelihood.
fn e_step(components: &[Component], data: &Dense, resp: &mut Dense) -> f64 {
    let k = components.len();
    let mut scratch = vec![0.0; data.cols];
    let mut total = 0.0;
    for i in 0..data.rows {
        let row = &mut resp.data[i * k..(i + 1) * k];
        for (c, comp) in components.iter().enumerate() {
            row[c] = comp.log_density(data.row(i), &mut scratch);
        }
        let lse = log_sum_exp(row);
        row.iter_mut().for_each(|v| *v = (*v - lse).exp());
        total += lse;
    }
    total / data.rows as f64
}

impl GaussianMixture {
    pub fn new(n_components: usize, max_iter: usize, tol: f64) -> Self {
        GaussianMixture::with_params(GmmParams { n_components, max_iter, tol, seed: 0 })
    }

    pub fn with_params(params: GmmParams) -> Self {
        GaussianMixture { params, state: None, components: Vec::new() }
    }

    pub fn fit(&mut self, x: &Matrix) -> Result<&mut Self> {
        let GmmParams { n_components: k, max_iter, tol, seed } = self.params;
        let data = Dense::from_matrix(x);
        if k == 0 || k > data.rows {
            return Err(MlError::Parameter(format!("n_components must be in 1..={}, got {k}", data.rows)));
        }
        if !(tol > 0.0) {
            return Err(MlError::Parameter(format!("tol must be positive, got {tol}")));
        }
        check_finite(x, "samples")?;
        let (n, d) = (data.rows, data.cols);

        let mut km = KMeans::with_params(KMeansParams { k, max_iter: 100, tol: 1e-6, seed });
        let labels = km.fit(x)?.fitted()?.assignments.to_vec();
        let mut resp = Dense::zeros(n, k);
        for (i, &l) in labels.iter().enumerate() {
            resp.data[i * k + l as usize] = 1.0;
        }
        let mut fit = Fit { weights: vec![1.0 / k as f64; k], means: Dense::zeros(k, d), covs: vec![identity(d); k] };
        fit.m_step(&data, &resp);

        let mut history: Vec<f64> = Vec::new();
        let mut converged = false;
        for _ in 0..max_iter.max(1) {
            let ll = e_step(&fit.components(), &data, &mut resp);
            let improved = history.last().map(|prev| ll - prev);
            history.push(ll);
            if improved.is_some_and(|delta| delta < tol) {
                converged = true;
                break;
            }
            fit.m_step(&data, &resp);
        }

        let covariances = fit
            .covs
            .iter_mut()
            .map(|cov| {
                regularize(cov, d);
                Matrix::from_vec(d, d, cov.iter().map(|&v| v as f32).collect())
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let state = GmmState {
            means: fit.means.to_matrix()?,
            covariances,
            weights: Matrix::from_vec(k, 1, fit.weights.iter().map(|&w| w as f32).collect())?,
            log_likelihood_history: history,
            converged,
        };
        self.components = components_from_state(&state);
        self.state = Some(state);
        Ok(self)
    }

    pub fn fitted(&self) -> Result<&GmmState> {
        self.state.as_ref().ok_or(MlError::NotFitted("GaussianMixture"))
    }

    fn check_dim(&self, len: usize) -> Result<usize> {
        let d = self.fitted()?.means.cols();
        if len != d {
            return Err(MlError::Shape(format!("expected {d} features, got {len}")));
        }
        Ok(d)
    }

    /// `log p(x)` for one point given as a slice.
    pub fn score_point(&self, x: &[f64]) -> Result<f64> {
        let d = self.check_dim(x.len())?;
        let mut scratch = vec![0.0; d];
        let logs: Vec<f64> = self.components.iter().map(|c| c.log_density(x, &mut scratch)).collect();
        Ok(log_sum_exp(&logs))
    }

    /// `log p(x)` for a single sample given as a `d×1` or `1×d` matrix.
    pub fn score(&self, x: &Matrix) -> Result<f64> {
        if x.rows() != 1 && x.cols() != 1 {
            return Err(MlError::Shape(format!("score takes one sample, got {}x{}", x.rows(), x.cols())));
        }
        self.score_point(&x.to_f64_vec())
    }

    /// `log p(x)` for every row, as an `n×1` matrix.
    pub fn score_samples(&self, x: &Matrix) -> Result<Matrix> {
        check_features(self.fitted()?.means.cols(), x)?;
        let data = Dense::from_matrix(x);
        let scores = (0..data.rows)
            .map(|i| self.score_point(data.row(i)).map(|s| s as f32))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_vec(data.rows, 1, scores)?)
    }

    /// Posterior component probabilities, `n×k`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let k = self.fitted()?.means.rows();
        check_features(self.fitted()?.means.cols(), x)?;
        let data = Dense::from_matrix(x);
        let mut resp = Dense::zeros(data.rows, k);
        e_step(&self.components, &data, &mut resp);
        resp.to_matrix()
    }

    /// Most probable component for each row, as an `n×1` matrix.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let proba = self.predict_proba(x)?;
        let rows = proba.to_rows();
        let labels = rows
            .iter()
            .map(|r| {
                let mut best = 0;
                for (c, &p) in r.iter().enumerate() {
                    if p > r[best] {
                        best = c;
                    }
                }
                best as f32
            })
            .collect();
        Ok(Matrix::from_vec(rows.len(), 1, labels)?)
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    (0..d).for_each(|j| m[j * d + j] = 1.0);
    m
}
