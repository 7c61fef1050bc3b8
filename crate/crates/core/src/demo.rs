//! The three demo figures: a Gaussian mixture density map, a k-NN decision
//! boundary, and perceptron / SGD-SVM boundaries, each on seeded synthetic
//! 2-D data.

use thiserror::Error;

use crate::matrix::{Matrix, MatrixError};
use crate::ml::linear::SgdParams;
use crate::ml::{GaussianMixture, KNeighborsClassifier, MlError, Sgd, SgdAlgorithm};
use crate::plot::{ContourOptions, Figure, PlotError};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Plot(#[from] PlotError),
}

/// Points drawn as `centre + L·z` with `z` standard normal, where `L` is a
/// lower-triangular 2×2 factor.
fn gaussian_blob(rng: &mut SplitMix64, n: usize, centre: [f64; 2], l: [[f64; 2]; 2]) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let (z0, z1) = (rng.next_gaussian(), rng.next_gaussian());
            [centre[0] + l[0][0] * z0, centre[1] + l[1][0] * z0 + l[1][1] * z1]
        })
        .collect()
}

fn to_matrix(points: &[[f64; 2]]) -> Result<Matrix, MatrixError> {
    Matrix::from_vec(points.len(), 2, points.iter().flat_map(|p| [p[0] as f32, p[1] as f32]).collect())
}

fn padded_bounds(x: &Matrix, y: &Matrix) -> (f64, f64, f64, f64) {
    (x.min() as f64 - 1.0, x.max() as f64 + 1.0, y.min() as f64 - 1.0, y.max() as f64 + 1.0)
}

/// Two correlated Gaussian clusters.
pub fn gmm_data(seed: u64) -> Result<Matrix, MatrixError> {
    let mut rng = SplitMix64::new(seed);
    let mut points = gaussian_blob(&mut rng, 120, [-2.0, -1.0], [[0.8, 0.0], [0.3, 0.6]]);
    points.extend(gaussian_blob(&mut rng, 120, [2.0, 1.5], [[0.6, 0.0], [-0.4, 0.9]]));
    to_matrix(&points)
}

/// Two mostly separated classes labelled 1 and 2.
pub fn knn_data(seed: u64) -> Result<(Matrix, Matrix), MatrixError> {
    let mut rng = SplitMix64::new(seed);
    let mut points = gaussian_blob(&mut rng, 60, [-1.5, -1.2], [[0.8, 0.0], [0.0, 0.8]]);
    points.extend(gaussian_blob(&mut rng, 60, [1.5, 1.2], [[0.8, 0.0], [0.0, 0.8]]));
    let labels: Vec<f32> = (0..120).map(|i| if i < 60 { 1.0 } else { 2.0 }).collect();
    Ok((to_matrix(&points)?, Matrix::column(&labels)?))
}

/// Two linearly separable classes labelled −1 and +1 inside `[−2, 4] × [−2, 2]`.
pub fn sgd_data(seed: u64) -> Result<(Matrix, Matrix), MatrixError> {
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (label, centre, accept) in [
        (-1.0f32, [-0.5, -0.6], (|x: f64| x <= 0.6) as fn(f64) -> bool),
        (1.0, [2.4, 0.6], |x: f64| x >= 1.3),
    ] {
        let mut kept = 0;
        while kept < 50 {
            let p = gaussian_blob(&mut rng, 1, centre, [[0.6, 0.0], [0.0, 0.5]])[0];
            if accept(p[0]) && (-1.9..=3.9).contains(&p[0]) && (-1.9..=1.9).contains(&p[1]) {
                points.push(p);
                labels.push(label);
                kept += 1;
            }
        }
    }
    Ok((to_matrix(&points)?, Matrix::column(&labels)?))
}

/// Filled log-density map of a two-component mixture under the data, with
/// a colorbar.
pub fn gmm_figure(seed: u64, width: u32, height: u32) -> Result<Figure, DemoError> {
    let data = gmm_data(seed)?;
    let mut gmm = GaussianMixture::new(2, 100, 1e-7);
    gmm.fit(&data)?;
    let (x, y) = (data.get_col(0)?, data.get_col(1)?);
    let (x0, x1, y0, y1) = padded_bounds(&x, &y);
    let mut fig = Figure::with_size(width, height);
    fig.contour_decision_function(x0, x1, y0, y1, &ContourOptions::default(), |px, py| {
        gmm.score_point(&[px, py]).unwrap_or(f64::NAN)
    })?;
    fig.scatter(&x, &y, None)?;
    fig.xlabel("x");
    fig.ylabel("y");
    fig.colorbar()?;
    Ok(fig)
}

/// Class-coloured samples and the k = 3 decision boundary at level 1.5.
pub fn knn_figure(seed: u64, width: u32, height: u32) -> Result<Figure, DemoError> {
    let (samples, labels) = knn_data(seed)?;
    let mut clf = KNeighborsClassifier::new(3);
    clf.fit(&samples, &labels)?;
    let (x, y) = (samples.get_col(0)?, samples.get_col(1)?);
    let mut fig = Figure::with_size(width, height);
    fig.scatter(&x, &y, Some(&labels.t()))?;
    let (x0, x1, y0, y1) = padded_bounds(&x, &y);
    fig.contour_decision_function(x0, x1, y0, y1, &ContourOptions::levels(vec![1.5]), |px, py| {
        clf.predict_point(&[px as f32, py as f32]).map_or(f64::NAN, f64::from)
    })?;
    fig.xlabel("x");
    fig.ylabel("y");
    fig.legend(&["Datapoints(2classes)"]);
    Ok(fig)
}

/// Level-0 boundaries of an SGD-SVM (red) and a perceptron (blue).
pub fn sgd_figure(seed: u64, width: u32, height: u32) -> Result<Figure, DemoError> {
    let (samples, labels) = sgd_data(seed)?;
    let mut per = Sgd::with_algorithm("perceptron", false, 0.0)?;
    per.params_mut().seed = seed;
    let mut svm = Sgd::new(SgdParams { algorithm: SgdAlgorithm::Sgdsvm, seed, ..SgdParams::default() });
    per.fit(&samples, &labels)?;
    svm.fit(&samples, &labels)?;
    let (x, y) = (samples.get_col(0)?, samples.get_col(1)?);
    let mut fig = Figure::with_size(width, height);
    fig.scatter(&x, &y, Some(&labels))?;
    let score = |model: &Sgd, px: f64, py: f64| {
        Matrix::from_vec(1, 2, vec![px as f32, py as f32])
            .map_err(MlError::from)
            .and_then(|m| model.predict(&m))
            .and_then(|s| Ok(s.get(0, 0)?))
            .map_or(f64::NAN, f64::from)
    };
    let red = ContourOptions::levels(vec![0.0]).styled(&["r"], &["solid"])?;
    fig.contour_decision_function(-2.0, 4.0, -2.0, 2.0, &red, |px, py| score(&svm, px, py))?;
    let blue = ContourOptions::levels(vec![0.0]).styled(&["b"], &["solid"])?;
    fig.contour_decision_function(-2.0, 4.0, -2.0, 2.0, &blue, |px, py| score(&per, px, py))?;
    fig.xlabel("x");
    fig.ylabel("y");
    fig.legend(&["Datapoints (2 classes)", "Decision boundary (SGD SVM)", "Decision boundary (perceptron)"]);
    Ok(fig)
}
