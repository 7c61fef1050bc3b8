//! Per-column statistics and row shuffling.

use super::{check_targets, Dense, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Column means as a `1×d` matrix.
pub fn mean(x: &Matrix) -> Result<Matrix> {
    let d = Dense::from_matrix(x);
    Ok(Matrix::from_vec(1, d.cols, d.column_means().iter().map(|&v| v as f32).collect())?)
}

/// Population standard deviation (divisor `n`) of each column as a `1×d`
/// matrix; constant columns give 0.
pub fn std(x: &Matrix) -> Result<Matrix> {
    let d = Dense::from_matrix(x);
    Ok(Matrix::from_vec(1, d.cols, column_std(&d).iter().map(|&v| v as f32).collect())?)
}

fn column_std(d: &Dense) -> Vec<f64> {
    let mean = d.column_means();
    let mut var = vec![0.0; d.cols];
    for i in 0..d.rows {
        for ((s, v), m) in var.iter_mut().zip(d.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter().map(|s| (s / d.rows as f64).sqrt()).collect()
}

/// Rows of `x` and `y` permuted by the same seeded permutation.
pub fn shuffle(x: &Matrix, y: &Matrix, seed: u64) -> Result<(Matrix, Matrix)> {
    check_targets(x, y)?;
    let mut order: Vec<usize> = (0..x.rows()).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    Ok((take_rows(x, &order)?, take_rows(y, &order)?))
}

pub(crate) fn take_rows(x: &Matrix, order: &[usize]) -> Result<Matrix> {
    let cols = x.cols();
    let src = x.to_vec();
    let mut out = Vec::with_capacity(order.len() * cols);
    for &i in order {
        out.extend_from_slice(&src[i * cols..(i + 1) * cols]);
    }
    Ok(Matrix::from_vec(order.len(), cols, out)?)
}

/// Centers every column and scales it to unit population standard
/// deviation. Constant columns become all zeros.
pub fn standardize(x: &Matrix) -> Result<Matrix> {
    let d = Dense::from_matrix(x);
    let mean = d.column_means();
    let std = column_std(&d);
    let mut out = d.centered(&mean);
    for row in out.data.chunks_mut(d.cols) {
        for (v, s) in row.iter_mut().zip(&std) {
            *v = if *s > 0.0 { *v / s } else { 0.0 };
        }
    }
    out.to_matrix()
}
