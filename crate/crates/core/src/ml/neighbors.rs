//! k-nearest-neighbour classification.

use serde::{Deserialize, Serialize};

use super::{check_features, check_finite, check_targets, squared_distance, Dense, MlError, Model, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub n_neighbors: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnnState {
    pub samples: Matrix,
    pub labels: Matrix,
}

/// Majority vote among the `n_neighbors` training samples closest in
/// Euclidean distance. Labels are non-negative integer class indices.
/// Equal distances are ordered by training index; tied votes go to the
/// smallest class index.
#[derive(Clone, Debug)]
pub struct KNeighborsClassifier {
    params: KnnParams,
    state: Option<KnnState>,
    cache: Option<(Dense, Vec<usize>)>,
}

impl Model for KNeighborsClassifier {
    const TYPE: &'static str = "knn";
    type Params = KnnParams;
    type State = KnnState;

    fn params(&self) -> &KnnParams {
        &self.params
    }

    fn state(&self) -> Option<&KnnState> {
        self.state.as_ref()
    }

    fn from_parts(params: KnnParams, state: KnnState) -> Result<Self> {
        let mut knn = KNeighborsClassifier::new(params.n_neighbors);
        knn.fit(&state.samples, &state.labels)?;
        Ok(knn)
    }
}

fn class_indices(y: &Matrix) -> Result<Vec<usize>> {
    y.to_vec()
        .iter()
        .map(|&l| {
            if l >= 0.0 && l.fract() == 0.0 && l < 16_777_216.0 {
                Ok(l as usize)
            } else {
                Err(MlError::Label(format!("class labels must be non-negative integers, found {l}")))
            }
        })
        .collect()
}

impl KNeighborsClassifier {
    pub fn new(n_neighbors: usize) -> Self {
        KNeighborsClassifier { params: KnnParams { n_neighbors }, state: None, cache: None }
    }

    pub fn fit(&mut self, samples: &Matrix, labels: &Matrix) -> Result<&mut Self> {
        check_targets(samples, labels)?;
        let k = self.params.n_neighbors;
        if k == 0 || k > samples.rows() {
            return Err(MlError::Parameter(format!(
                "n_neighbors must be in 1..={}, got {k}",
                samples.rows()
            )));
        }
        let classes = class_indices(labels)?;
        self.cache = Some((Dense::from_matrix(samples), classes));
        self.state = Some(KnnState { samples: samples.clone(), labels: labels.clone() });
        Ok(self)
    }

    /// Predicted class index for each row of `x`, as an `n×1` matrix.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let (train, classes) = self.cache.as_ref().ok_or(MlError::NotFitted("KNeighborsClassifier"))?;
        check_features(train.cols, x)?;
        check_finite(x, "queries")?;
        let queries = Dense::from_matrix(x);
        let n_classes = classes.iter().max().map_or(0, |m| m + 1);
        let mut out = Vec::with_capacity(queries.rows);
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.rows);
        let mut votes = vec![0usize; n_classes];
        for q in 0..queries.rows {
            let query = queries.row(q);
            dist.clear();
            dist.extend((0..train.rows).map(|i| (squared_distance(query, train.row(i)), i)));
            let k = self.params.n_neighbors;
            dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            votes.iter_mut().for_each(|v| *v = 0);
            for &(_, i) in &dist[..k] {
                votes[classes[i]] += 1;
            }
            // `max_by_key` keeps the last maximum, so scan in reverse to
            // favour the smallest class index.
            let winner = votes.iter().enumerate().rev().max_by_key(|(_, &v)| v).map_or(0, |(c, _)| c);
            out.push(winner as f32);
        }
        Ok(Matrix::from_vec(queries.rows, 1, out)?)
    }

    /// Prediction for a single point, convenient for decision-boundary plots.
    pub fn predict_point(&self, point: &[f32]) -> Result<f32> {
        let m = Matrix::from_vec(1, point.len(), point.to_vec())?;
        Ok(self.predict(&m)?.get(0, 0)?)
    }
}
