//! Estimators over [`Matrix`] data: linear models, nearest neighbours,
//! clustering, Gaussian mixtures and projections.
//!
//! Every estimator follows the same contract: configure, `fit`, then
//! `predict`/`transform`/`score`. Calling any of the latter before `fit`
//! returns [`MlError::NotFitted`]. Fitted state is immutable and may be
//! shared across threads. Numerics run in `f64` on host copies; fitted
//! parameters are stored as `f32` matrices so that a serialized model
//! reproduces its predictions bit for bit.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::matrix::{Matrix, MatrixError};

pub mod cca;
pub mod gmm;
pub mod kmeans;
pub mod linear;
pub mod neighbors;
pub mod pca;
pub mod stats;

pub use self::cca::Cca;
pub use self::gmm::GaussianMixture;
pub use self::kmeans::KMeans;
pub use self::linear::{Lasso, LinearKind, LinearModel, LinearRegression, LogisticRegression, Sgd, SgdAlgorithm};
pub use self::neighbors::KNeighborsClassifier;
pub use self::pca::Pca;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlError {
    #[error("{0} must be fitted before use")]
    NotFitted(&'static str),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid labels: {0}")]
    Label(String),
    #[error("invalid input shape: {0}")]
    Shape(String),
    #[error("{0}")]
    Singular(String),
    #[error("insufficient rank: {0}")]
    Rank(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("model serialization: {0}")]
    Serialization(String),
}

impl From<LinalgError> for MlError {
    fn from(e: LinalgError) -> Self {
        MlError::Singular(e.to_string())
    }
}

pub type Result<T, E = MlError> = std::result::Result<T, E>;

/// Samples paired with per-sample labels or regression targets.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub samples: Matrix,
    pub labels: Matrix,
}

impl Dataset {
    pub fn new(samples: Matrix, labels: Matrix) -> Result<Self> {
        check_targets(&samples, &labels)?;
        Ok(Dataset { samples, labels })
    }
}

/// Estimators that round-trip through `{"type", "params", "state"}` JSON.
pub trait Model: Sized {
    const TYPE: &'static str;
    type Params: Serialize + DeserializeOwned;
    type State: Serialize + DeserializeOwned;

    fn params(&self) -> &Self::Params;
    fn state(&self) -> Option<&Self::State>;
    fn from_parts(params: Self::Params, state: Self::State) -> Result<Self>;

    fn to_json(&self) -> Result<String> {
        let state = self.state().ok_or(MlError::NotFitted(Self::TYPE))?;
        let doc = Envelope { kind: Self::TYPE.to_owned(), params: self.params(), state };
        serde_json::to_string(&doc).map_err(|e| MlError::Serialization(e.to_string()))
    }

    fn from_json(text: &str) -> Result<Self> {
        let doc: Envelope<Self::Params, Self::State> =
            serde_json::from_str(text).map_err(|e| MlError::Serialization(e.to_string()))?;
        if doc.kind != Self::TYPE {
            return Err(MlError::Serialization(format!(
                "expected model type {:?}, found {:?}",
                Self::TYPE,
                doc.kind
            )));
        }
        Self::from_parts(doc.params, doc.state)
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<P, S> {
    #[serde(rename = "type")]
    kind: String,
    params: P,
    state: S,
}

/// Row-major `f64` working copy of a matrix.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn from_matrix(m: &Matrix) -> Self {
        Dense { rows: m.rows(), cols: m.cols(), data: m.to_f64_vec() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        Ok(Matrix::from_vec(self.rows, self.cols, self.data.iter().map(|&v| v as f32).collect())?)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.rows as f64);
        mean
    }

    /// Copy with column means subtracted.
    pub fn centered(&self, mean: &[f64]) -> Dense {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            for (v, m) in row.iter_mut().zip(mean) {
                *v -= m;
            }
        }
        out
    }

    /// `selfᵀ · self`, scaled by `1 / denom`.
    pub fn gram(&self, denom: f64) -> Vec<f64> {
        self.cross(self, denom)
    }

    /// `selfᵀ · other`, scaled by `1 / denom`.
    pub fn cross(&self, other: &Dense, denom: f64) -> Vec<f64> {
        let (p, q) = (self.cols, other.cols);
        let mut out = vec![0.0; p * q];
        for i in 0..self.rows {
            let a = self.row(i);
            let b = other.row(i);
            for (r, &ar) in a.iter().enumerate() {
                for (c, &bc) in b.iter().enumerate() {
                    out[r * q + c] += ar * bc;
                }
            }
        }
        out.iter_mut().for_each(|v| *v /= denom);
        out
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_finite(x: &Matrix, what: &str) -> Result<()> {
    if x.to_vec().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MlError::Parameter(format!("{what} contains non-finite values")))
    }
}

pub(crate) fn check_targets(x: &Matrix, y: &Matrix) -> Result<()> {
    if y.cols() != 1 || y.rows() != x.rows() {
        return Err(MlError::Shape(format!(
            "targets must be {}x1 to match {} samples, got {}x{}",
            x.rows(),
            x.rows(),
            y.rows(),
            y.cols()
        )));
    }
    check_finite(x, "samples")?;
    check_finite(y, "targets")
}

pub(crate) fn check_features(expected: usize, x: &Matrix) -> Result<()> {
    if x.cols() != expected {
        return Err(MlError::Shape(format!("expected {expected} features, got {}", x.cols())));
    }
    Ok(())
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Subtracts the `1×d` row vector `mean` from each row of `x` using the
/// column-broadcast primitive on the transposed view.
pub(crate) fn subtract_row(x: &Matrix, mean: &Matrix) -> Result<Matrix> {
    Ok(x.t().sub(&mean.t())?.t())
}
