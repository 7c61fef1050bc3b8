//! Dense single-precision matrix with a storage-direction flag.
//!
//! Elements live in one flat `f32` buffer. The `row_major` flag says how a
//! logical `(i, j)` maps into it, which makes [`Matrix::t`] a constant-time
//! flag flip over shared storage. Results of arithmetic are always row-major.
//!
//! Arithmetic, products and maps are routed through the current
//! [`Engine`](crate::backend::Engine); everything else runs on the host.

mod json;
pub(crate) mod storage;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use self::json::{from_json, to_json};
use self::storage::Storage;
use crate::backend::{self, BackendError};
pub use crate::kernels::{BinaryOp, ConvMode};
use crate::kernels::{self, View};
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("invalid dimensions {rows}x{cols}: both must be at least 1")]
    Dimension { rows: usize, cols: usize },
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("ragged input: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("index ({i}, {j}) out of range for a {rows}x{cols} matrix")]
    Index { i: usize, j: usize, rows: usize, cols: usize },
    #[error("JSON parse error at {position}: {message}")]
    Parse { position: String, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub type Result<T, E = MatrixError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOp {
    Min,
    Max,
    Sum,
    Mean,
}

/// Where a matrix's authoritative data currently lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Residency {
    Host,
    /// Copy held by the context with this id. `dirty` means the host buffer
    /// is stale until the next read.
    Device { context: u64, dirty: bool },
}

#[derive(Clone)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    row_major: bool,
    pub(crate) storage: Arc<Storage>,
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || rows.checked_mul(cols).is_none() {
        return Err(MatrixError::Dimension { rows, cols });
    }
    Ok(())
}

impl Matrix {
    pub(crate) fn from_storage(rows: usize, cols: usize, row_major: bool, storage: Arc<Storage>) -> Self {
        Matrix { rows, cols, row_major, storage }
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f32) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self::from_storage(rows, cols, true, Arc::new(Storage::host(vec![value; rows * cols]))))
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        check_dims(n, n)?;
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_vec(n, n, data)
    }

    /// Takes ownership of row-major `data`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_vec_with_layout(rows, cols, data, true)
    }

    pub fn from_vec_with_layout(rows: usize, cols: usize, data: Vec<f32>, row_major: bool) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(MatrixError::Shape {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Self::from_storage(rows, cols, row_major, Arc::new(Storage::host(data))))
    }

    /// Builds a matrix from nested rows, e.g. `from_array(&[[x], [y]])`.
    pub fn from_array<T, R>(nested: &[R]) -> Result<Self>
    where
        T: Copy + Into<f64>,
        R: AsRef<[T]>,
    {
        let rows = nested.len();
        let cols = nested.first().map_or(0, |r| r.as_ref().len());
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for (row, r) in nested.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MatrixError::Ragged { row, found: r.len(), expected: cols });
            }
            data.extend(r.iter().map(|&v| v.into() as f32));
        }
        Self::from_vec(rows, cols, data)
    }

    /// Column vector from a slice.
    pub fn column(values: &[f32]) -> Result<Self> {
        Self::from_vec(values.len(), 1, values.to_vec())
    }

    /// i.i.d. uniform [0, 1) entries. A fixed seed gives a bit-identical
    /// matrix on every run and platform.
    pub fn random(rows: usize, cols: usize, seed: Option<u64>) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut rng = seed.map_or_else(SplitMix64::from_entropy, SplitMix64::new);
        let data = (0..rows * cols).map(|_| rng.next_f32()).collect();
        Self::from_vec(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_row_major(&self) -> bool {
        self.row_major
    }

    /// True when both matrices are views of the same buffer.
    pub fn shares_storage(&self, other: &Matrix) -> bool {
        Arc::ptr_eq(&self.storage, &other.storage)
    }

    pub fn residency(&self) -> Residency {
        let state = self.storage.state.read();
        match &state.device {
            None => Residency::Host,
            Some(slot) => Residency::Device {
                context: slot.buffer.context_id(),
                dirty: slot.dirty_on_device,
            },
        }
    }

    /// True when the device copy is newer than the host buffer.
    pub fn is_device_dirty(&self) -> bool {
        self.storage.state.read().host_is_stale()
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        if self.row_major {
            i * self.cols + j
        } else {
            j * self.rows + i
        }
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.rows || j >= self.cols {
            return Err(MatrixError::Index { i, j, rows: self.rows, cols: self.cols });
        }
        Ok(())
    }

    /// Element read. Synchronizes with the device if it holds newer data.
    pub fn get(&self, i: usize, j: usize) -> Result<f32> {
        self.check_index(i, j)?;
        Ok(self.storage.read_host()[self.offset(i, j)])
    }

    /// Element write. Storage shared with other views is copied first, and any
    /// device copy is dropped since the host now holds the newest data.
    pub fn set(&mut self, i: usize, j: usize, value: f32) -> Result<()> {
        self.check_index(i, j)?;
        let offset = self.offset(i, j);
        if Arc::get_mut(&mut self.storage).is_none() {
            let copy = self.storage.read_host().to_vec();
            self.storage = Arc::new(Storage::host(copy));
        }
        let state = Arc::get_mut(&mut self.storage)
            .expect("storage uniquely owned after copy")
            .state
            .get_mut();
        state.download();
        state.device = None;
        state.host[offset] = value;
        Ok(())
    }

    /// Runs `f` over a logical view of up-to-date host data.
    pub(crate) fn with_view<R>(&self, f: impl FnOnce(View<'_>) -> R) -> R {
        let data = self.storage.read_host();
        f(View { data: &data, rows: self.rows, cols: self.cols, row_major: self.row_major })
    }

    /// Row-major copy of the elements.
    pub fn to_vec(&self) -> Vec<f32> {
        self.with_view(|v| v.to_row_major().into_owned())
    }

    /// Row-major copy widened to `f64`.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.with_view(|v| v.to_row_major().iter().map(|&x| x as f64).collect())
    }

    pub fn to_rows(&self) -> Vec<Vec<f32>> {
        let flat = self.to_vec();
        flat.chunks(self.cols).map(<[f32]>::to_vec).collect()
    }

    /// Constant-time transpose: shares the buffer and flips the direction flag.
    pub fn t(&self) -> Matrix {
        Matrix {
            rows: self.cols,
            cols: self.rows,
            row_major: !self.row_major,
            storage: Arc::clone(&self.storage),
        }
    }

    pub fn transpose(&self) -> Matrix {
        self.t()
    }

    /// Copy of column `j` as a `rows x 1` matrix.
    pub fn get_col(&self, j: usize) -> Result<Matrix> {
        if j >= self.cols {
            return Err(MatrixError::Index { i: 0, j, rows: self.rows, cols: self.cols });
        }
        let data = self.with_view(|v| (0..self.rows).map(|i| v.at(i, j)).collect());
        Matrix::from_vec(self.rows, 1, data)
    }

    /// Copy of row `i` as a `1 x cols` matrix.
    pub fn get_row(&self, i: usize) -> Result<Matrix> {
        if i >= self.rows {
            return Err(MatrixError::Index { i, j: 0, rows: self.rows, cols: self.cols });
        }
        let data = self.with_view(|v| (0..self.cols).map(|j| v.at(i, j)).collect());
        Matrix::from_vec(1, self.cols, data)
    }

    pub fn elementwise(&self, op: BinaryOp, other: &Matrix) -> Result<Matrix> {
        backend::current().elementwise(op, self, other)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.elementwise(BinaryOp::Add, other)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.elementwise(BinaryOp::Sub, other)
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.elementwise(BinaryOp::Mul, other)
    }

    pub fn div(&self, other: &Matrix) -> Result<Matrix> {
        self.elementwise(BinaryOp::Div, other)
    }

    pub fn scale(&self, alpha: f32) -> Result<Matrix> {
        backend::current().scale(self, alpha)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        backend::current().matmul(self, other)
    }

    /// Reduction over all elements with an `f64` accumulator. `min`/`max`
    /// skip NaNs unless every element is NaN.
    pub fn reduce(&self, op: ReduceOp) -> f32 {
        self.with_view(|v| {
            let data = v.data;
            match op {
                ReduceOp::Sum => data.iter().map(|&x| x as f64).sum::<f64>() as f32,
                ReduceOp::Mean => {
                    (data.iter().map(|&x| x as f64).sum::<f64>() / data.len() as f64) as f32
                }
                ReduceOp::Min => data
                    .iter()
                    .copied()
                    .filter(|x| !x.is_nan())
                    .reduce(f32::min)
                    .unwrap_or(f32::NAN),
                ReduceOp::Max => data
                    .iter()
                    .copied()
                    .filter(|x| !x.is_nan())
                    .reduce(f32::max)
                    .unwrap_or(f32::NAN),
            }
        })
    }

    pub fn min(&self) -> f32 {
        self.reduce(ReduceOp::Min)
    }

    pub fn max(&self) -> f32 {
        self.reduce(ReduceOp::Max)
    }

    pub fn sum(&self) -> f32 {
        self.reduce(ReduceOp::Sum)
    }

    pub fn mean(&self) -> f32 {
        self.reduce(ReduceOp::Mean)
    }

    /// 2D convolution with the kernel flipped. `Valid` keeps only full
    /// overlaps; `Same` zero-pads and returns `self`'s shape.
    pub fn convolve2d(&self, kernel: &Matrix, mode: ConvMode) -> Result<Matrix> {
        if mode == ConvMode::Valid && (kernel.rows > self.rows || kernel.cols > self.cols) {
            return Err(MatrixError::Shape {
                op: "convolve2d",
                left: self.shape(),
                right: kernel.shape(),
            });
        }
        let (rows, cols, data) = self.with_view(|a| kernel.with_view(|k| kernels::convolve2d(a, k, mode)));
        Matrix::from_vec(rows, cols, data)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Matrix> {
        from_json(text)
    }

    /// Logical elementwise equality (ignores layout and residency).
    pub fn values_eq(&self, other: &Matrix) -> bool {
        self.shape() == other.shape() && self.to_vec() == other.to_vec()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Matrix");
        s.field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("row_major", &self.row_major)
            .field("residency", &self.residency());
        if self.len() <= 64 && !self.is_device_dirty() {
            s.field("data", &self.to_rows());
        }
        s.finish()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.4}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}
