//! Small dense `f64` solvers used by the estimators: Cholesky and Gaussian
//! elimination for linear systems, cyclic Jacobi for symmetric eigenproblems.
//! Square matrices are row-major slices of length `n * n`.

use thiserror::Error;

/// Pivots smaller than this (in absolute value) mark a system as singular.
pub const SINGULAR_PIVOT: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {value:e} at column {column})")]
    Singular { column: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`, or `None` if `A` is not
/// numerically positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= SINGULAR_PIVOT || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` for each of the `nrhs` columns of row-major `b`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64], nrhs: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for c in 0..nrhs {
        for i in 0..n {
            let mut s = x[i * nrhs + c];
            for k in 0..i {
                s -= l[i * n + k] * x[k * nrhs + c];
            }
            x[i * nrhs + c] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i * nrhs + c];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k * nrhs + c];
            }
            x[i * nrhs + c] = s / l[i * n + i];
        }
    }
    x
}

/// log |A| from a Cholesky factor.
pub fn cholesky_log_det(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0
}

fn is_symmetric(a: &[f64], n: usize) -> bool {
    (0..n).all(|i| (0..i).all(|j| {
        let (x, y) = (a[i * n + j], a[j * n + i]);
        (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
    }))
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[f64], n: usize, b: &[f64], nrhs: usize) -> Result<Vec<f64>, LinalgError> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| m[p * n + col].abs().total_cmp(&m[q * n + col].abs()))
            .unwrap();
        let pivot = m[pivot_row * n + col];
        if pivot.abs() < SINGULAR_PIVOT || !pivot.is_finite() {
            return Err(LinalgError::Singular { column: col, value: pivot });
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            for k in 0..nrhs {
                x.swap(col * nrhs + k, pivot_row * nrhs + k);
            }
        }
        for r in col + 1..n {
            let factor = m[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= factor * m[col * n + k];
            }
            for k in 0..nrhs {
                x[r * nrhs + k] -= factor * x[col * nrhs + k];
            }
        }
    }
    for i in (0..n).rev() {
        for k in 0..nrhs {
            let mut s = x[i * nrhs + k];
            for j in i + 1..n {
                s -= m[i * n + j] * x[j * nrhs + k];
            }
            x[i * nrhs + k] = s / m[i * n + i];
        }
    }
    Ok(x)
}

/// Solves `A X = B`, taking the Cholesky fast path for symmetric positive
/// definite `A`.
pub fn solve(a: &[f64], n: usize, b: &[f64], nrhs: usize) -> Result<Vec<f64>, LinalgError> {
    if a.len() != n * n || b.len() != n * nrhs {
        return Err(LinalgError::Dimension(format!(
            "A has {} entries for n={n}, B has {} for {nrhs} columns",
            a.len(),
            b.len()
        )));
    }
    if is_symmetric(a, n) {
        if let Some(l) = cholesky(a, n) {
            return Ok(cholesky_solve(&l, n, b, nrhs));
        }
    }
    gauss_solve(a, n, b, nrhs)
}

/// Eigenvalues (descending) and eigenvectors of a symmetric matrix.
/// `vectors[i * n + k]` is component `i` of the eigenvector for
/// `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
pub fn symmetric_eigen(a: &[f64], n: usize) -> SymmetricEigen {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y * n + y].total_cmp(&m[x * n + x]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + dst] = v[i * n + src];
        }
    }
    SymmetricEigen { values, vectors }
}

/// `A^{-1/2}` for symmetric positive definite `A`.
pub fn inverse_sqrt_spd(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    let eig = symmetric_eigen(a, n);
    if let Some((k, &val)) = eig.values.iter().enumerate().find(|(_, &v)| v <= SINGULAR_PIVOT) {
        return Err(LinalgError::Singular { column: k, value: val });
    }
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        let w = 1.0 / eig.values[k].sqrt();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] += w * eig.vectors[i * n + k] * eig.vectors[j * n + k];
            }
        }
    }
    Ok(out)
}

/// Row-major product of `a` (m×k) and `b` (k×n).
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += x * b[p * n + j];
            }
        }
    }
    out
}

/// Row-major transpose of an `m x n` array.
pub fn transpose(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}
