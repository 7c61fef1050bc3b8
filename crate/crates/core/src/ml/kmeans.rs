//! Lloyd's k-means clustering.

use serde::{Deserialize, Serialize};

use super::{check_features, check_finite, squared_distance, Dense, MlError, Model, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KMeansState {
    /// `k×d` cluster centres.
    pub centroids: Matrix,
    /// `n×1` cluster index of each training sample.
    pub assignments: Matrix,
    /// Sum of squared distances from each sample to its centroid.
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_history: Vec<f64>,
}

/// Centroids start at `k` distinct training rows drawn with the seed.
/// Each iteration assigns samples to their nearest centroid (smallest index
/// on ties) and moves centroids to their cluster means; a centroid left
/// without samples is moved onto the sample farthest from its own centroid.
/// Stops once no centroid moves by `tol` or more, or after `max_iter`
/// iterations.
#[derive(Clone, Debug)]
pub struct KMeans {
    params: KMeansParams,
    state: Option<KMeansState>,
}

impl Model for KMeans {
    const TYPE: &'static str = "kmeans";
    type Params = KMeansParams;
    type State = KMeansState;

    fn params(&self) -> &KMeansParams {
        &self.params
    }

    fn state(&self) -> Option<&KMeansState> {
        self.state.as_ref()
    }

    fn from_parts(params: KMeansParams, state: KMeansState) -> Result<Self> {
        Ok(KMeans { params, state: Some(state) })
    }
}

fn nearest(point: &[f64], centroids: &Dense) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows {
        let d = squared_distance(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

impl KMeans {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeans::with_params(KMeansParams { k, max_iter: 300, tol: 1e-4, seed })
    }

    pub fn with_params(params: KMeansParams) -> Self {
        KMeans { params, state: None }
    }

    pub fn fit(&mut self, x: &Matrix) -> Result<&mut Self> {
        let KMeansParams { k, max_iter, tol, seed } = self.params;
        let data = Dense::from_matrix(x);
        if k == 0 || k > data.rows {
            return Err(MlError::Parameter(format!("k must be in 1..={}, got {k}", data.rows)));
        }
        check_finite(x, "samples")?;
        let (n, d) = (data.rows, data.cols);

        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = SplitMix64::new(seed);
        for i in 0..k {
            let j = i + rng.next_below(n - i);
            order.swap(i, j);
        }
        let mut centroids = Dense::zeros(k, d);
        for (c, &i) in order[..k].iter().enumerate() {
            centroids.data[c * d..(c + 1) * d].copy_from_slice(data.row(i));
        }

        let mut assign = vec![0usize; n];
        let mut dist = vec![0.0; n];
        let mut history = Vec::new();
        for iter in 0..max_iter.max(1) {
            for i in 0..n {
                (assign[i], dist[i]) = nearest(data.row(i), &centroids);
            }
            history.push(dist.iter().sum());
            if iter + 1 == max_iter.max(1) {
                break;
            }

            let mut sums = Dense::zeros(k, d);
            let mut counts = vec![0usize; k];
            for i in 0..n {
                counts[assign[i]] += 1;
                sums.data[assign[i] * d..(assign[i] + 1) * d]
                    .iter_mut()
                    .zip(data.row(i))
                    .for_each(|(s, v)| *s += v);
            }
            let mut shift = 0.0f64;
            for c in 0..k {
                let updated: Vec<f64> = if counts[c] > 0 {
                    sums.row(c).iter().map(|s| s / counts[c] as f64).collect()
                } else {
                    let far = (0..n).max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a))).unwrap_or(0);
                    dist[far] = 0.0;
                    data.row(far).to_vec()
                };
                shift = shift.max(squared_distance(centroids.row(c), &updated).sqrt());
                centroids.data[c * d..(c + 1) * d].copy_from_slice(&updated);
            }
            if shift < tol {
                for i in 0..n {
                    (assign[i], dist[i]) = nearest(data.row(i), &centroids);
                }
                history.push(dist.iter().sum());
                break;
            }
        }

        self.state = Some(KMeansState {
            centroids: centroids.to_matrix()?,
            assignments: Matrix::from_vec(n, 1, assign.iter().map(|&a| a as f32).collect())?,
            inertia: *history.last().unwrap_or(&0.0),
            inertia_history: history,
        });
        Ok(self)
    }

    pub fn fitted(&self) -> Result<&KMeansState> {
        self.state.as_ref().ok_or(MlError::NotFitted("KMeans"))
    }

    /// Index of the nearest centroid for each row of `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let state = self.fitted()?;
        check_features(state.centroids.cols(), x)?;
        let centroids = Dense::from_matrix(&state.centroids);
        let data = Dense::from_matrix(x);
        let labels = (0..data.rows).map(|i| nearest(data.row(i), &centroids).0 as f32).collect();
        Ok(Matrix::from_vec(data.rows, 1, labels)?)
    }
}
