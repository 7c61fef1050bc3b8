//! Canonical correlation analysis.

use serde::{Deserialize, Serialize};

use super::pca::leading_eigenvectors;
use super::{check_features, check_finite, subtract_row, Dense, MlError, Model, Result};
use crate::linalg;
use crate::matrix::Matrix;

/// Added to the diagonal of both auto-covariances.
pub const CCA_RIDGE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcaParams {
    pub n_components: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CcaState {
    /// `dx×m` projection for the first view.
    pub wx: Matrix,
    /// `dy×m` projection for the second view.
    pub wy: Matrix,
    pub x_means: Matrix,
    pub y_means: Matrix,
    /// Canonical correlations in `[0, 1]`, non-increasing.
    pub correlations: Vec<f64>,
}

/// Paired projections maximizing correlation between two views. With
/// whitening `K = Cxx^{-1/2} · Cxy · Cyy^{-1/2}`, the canonical
/// correlations are the singular values of `K`, obtained from the symmetric
/// eigenproblem of `K·Kᵀ`.
#[derive(Clone, Debug)]
pub struct Cca {
    params: CcaParams,
    state: Option<CcaState>,
}

impl Model for Cca {
    const TYPE: &'static str = "cca";
    type Params = CcaParams;
    type State = CcaState;

    fn params(&self) -> &CcaParams {
        &self.params
    }

    fn state(&self) -> Option<&CcaState> {
        self.state.as_ref()
    }

    fn from_parts(params: CcaParams, state: CcaState) -> Result<Self> {
        Ok(Cca { params, state: Some(state) })
    }
}

fn ridged_covariance(x: &Dense, n: f64) -> Vec<f64> {
    let mut c = x.gram(n - 1.0);
    (0..x.cols).for_each(|j| c[j * x.cols + j] += CCA_RIDGE);
    c
}

impl Cca {
    pub fn new(n_components: usize) -> Self {
        Cca { params: CcaParams { n_components }, state: None }
    }

    pub fn fit(&mut self, x: &Matrix, y: &Matrix) -> Result<&mut Self> {
        let m = self.params.n_components;
        let (xd, yd) = (Dense::from_matrix(x), Dense::from_matrix(y));
        let (n, dx, dy) = (xd.rows, xd.cols, yd.cols);
        if yd.rows != n {
            return Err(MlError::Shape(format!("views have {n} and {} samples", yd.rows)));
        }
        if n <= dx.max(dy) {
            return Err(MlError::Rank(format!(
                "need more than {} samples for {dx} and {dy} features, got {n}",
                dx.max(dy)
            )));
        }
        if m == 0 || m > dx.min(dy) {
            return Err(MlError::Parameter(format!("n_components must be in 1..={}, got {m}", dx.min(dy))));
        }
        check_finite(x, "first view")?;
        check_finite(y, "second view")?;
        let (x_mean, y_mean) = (xd.column_means(), yd.column_means());
        let (xc, yc) = (xd.centered(&x_mean), yd.centered(&y_mean));
        let nf = n as f64;
        let sx = linalg::inverse_sqrt_spd(&ridged_covariance(&xc, nf), dx)?;
        let sy = linalg::inverse_sqrt_spd(&ridged_covariance(&yc, nf), dy)?;
        let cxy = xc.cross(&yc, nf - 1.0);

        let k = linalg::matmul(&linalg::matmul(&sx, &cxy, dx, dx, dy), &sy, dx, dy, dy);
        let kt = linalg::transpose(&k, dx, dy);
        let kkt = linalg::matmul(&k, &kt, dx, dy, dx);
        let (u, values) = leading_eigenvectors(&kkt, dx, m);
        let correlations: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt().min(1.0)).collect();

        // v_j = Kᵀ u_j / ρ_j.
        let ktu = linalg::matmul(&kt, &u, dy, dx, m);
        let mut v = vec![0.0; dy * m];
        for j in 0..m {
            if correlations[j] > 0.0 {
                for i in 0..dy {
                    v[i * m + j] = ktu[i * m + j] / correlations[j];
                }
            }
        }
        let wx = linalg::matmul(&sx, &u, dx, dx, m);
        let wy = linalg::matmul(&sy, &v, dy, dy, m);
        self.state = Some(CcaState {
            wx: Dense { rows: dx, cols: m, data: wx }.to_matrix()?,
            wy: Dense { rows: dy, cols: m, data: wy }.to_matrix()?,
            x_means: Dense { rows: 1, cols: dx, data: x_mean }.to_matrix()?,
            y_means: Dense { rows: 1, cols: dy, data: y_mean }.to_matrix()?,
            correlations,
        });
        Ok(self)
    }

    pub fn fitted(&self) -> Result<&CcaState> {
        self.state.as_ref().ok_or(MlError::NotFitted("Cca"))
    }

    pub fn correlations(&self) -> Result<&[f64]> {
        Ok(&self.fitted()?.correlations)
    }

    /// Canonical variates of both views, each `n×m`.
    pub fn transform(&self, x: &Matrix, y: &Matrix) -> Result<(Matrix, Matrix)> {
        let s = self.fitted()?;
        check_features(s.wx.rows(), x)?;
        check_features(s.wy.rows(), y)?;
        Ok((subtract_row(x, &s.x_means)?.matmul(&s.wx)?, subtract_row(y, &s.y_means)?.matmul(&s.wy)?))
    }
}
