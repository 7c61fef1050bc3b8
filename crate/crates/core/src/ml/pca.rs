//! Principal component analysis.

use serde::{Deserialize, Serialize};

use super::{check_features, check_finite, fix_sign, subtract_row, Dense, MlError, Model, Result};
use crate::linalg;
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaParams {
    pub n_components: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaState {
    /// `d×m`, orthonormal columns ordered by decreasing variance.
    pub components: Matrix,
    /// `1×d` column means of the training data.
    pub means: Matrix,
    /// Variance captured by each component (covariance eigenvalues).
    pub explained_variance: Vec<f64>,
}

/// Projects centred data onto the leading eigenvectors of the sample
/// covariance (divisor `n − 1`). Each component's sign is chosen so that
/// its largest-magnitude entry is positive.
#[derive(Clone, Debug)]
pub struct Pca {
    params: PcaParams,
    state: Option<PcaState>,
}

impl Model for Pca {
    const TYPE: &'static str = "pca";
    type Params = PcaParams;
    type State = PcaState;

    fn params(&self) -> &PcaParams {
        &self.params
    }

    fn state(&self) -> Option<&PcaState> {
        self.state.as_ref()
    }

    fn from_parts(params: PcaParams, state: PcaState) -> Result<Self> {
        Ok(Pca { params, state: Some(state) })
    }
}

/// Top `m` eigenpairs of a symmetric `n×n` matrix with the sign
/// convention applied, as (row-major `n×m` vectors, values).
pub(crate) fn leading_eigenvectors(a: &[f64], n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let eig = linalg::symmetric_eigen(a, n);
    let mut vectors = vec![0.0; n * m];
    for k in 0..m {
        let mut v: Vec<f64> = (0..n).map(|i| eig.vectors[i * n + k]).collect();
        fix_sign(&mut v);
        for i in 0..n {
            vectors[i * m + k] = v[i];
        }
    }
    (vectors, eig.values[..m].to_vec())
}

impl Pca {
    pub fn new(n_components: usize) -> Self {
        Pca { params: PcaParams { n_components }, state: None }
    }

    pub fn fit(&mut self, x: &Matrix) -> Result<&mut Self> {
        let m = self.params.n_components;
        let data = Dense::from_matrix(x);
        if m == 0 || m > data.cols {
            return Err(MlError::Parameter(format!("n_components must be in 1..={}, got {m}", data.cols)));
        }
        check_finite(x, "samples")?;
        let mean = data.column_means();
        let denom = (data.rows.max(2) - 1) as f64;
        let cov = data.centered(&mean).gram(denom);
        let (vectors, values) = leading_eigenvectors(&cov, data.cols, m);
        self.state = Some(PcaState {
            components: Dense { rows: data.cols, cols: m, data: vectors }.to_matrix()?,
            means: Dense { rows: 1, cols: data.cols, data: mean }.to_matrix()?,
            explained_variance: values,
        });
        Ok(self)
    }

    pub fn fitted(&self) -> Result<&PcaState> {
        self.state.as_ref().ok_or(MlError::NotFitted("Pca"))
    }

    /// `(X − mean) · components`, `n×m`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let state = self.fitted()?;
        check_features(state.means.cols(), x)?;
        Ok(subtract_row(x, &state.means)?.matmul(&state.components)?)
    }

    /// `Z · componentsᵀ + mean`, mapping projections back to feature space.
    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        let state = self.fitted()?;
        check_features(state.components.cols(), z)?;
        let back = z.matmul(&state.components.t())?;
        Ok(back.t().add(&state.means.t())?.t())
    }
}
