//! Numeric inner loops shared by the sequential path and the parallel
//! device. Both backends drive the same per-row routines so results agree
//! bit-for-bit; only the row scheduling differs.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::backend::mapgen::Program;

/// Borrowed logical view of a flat buffer under a direction flag.
#[derive(Clone, Copy, Debug)]
pub(crate) struct View<'a> {
    pub data: &'a [f32],
    pub rows: usize,
    pub cols: usize,
    pub row_major: bool,
}

impl<'a> View<'a> {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f32 {
        if self.row_major {
            self.data[i * self.cols + j]
        } else {
            self.data[j * self.rows + i]
        }
    }

    /// Row `i` as a contiguous slice, when the layout allows it.
    #[inline]
    pub fn row(&self, i: usize) -> Option<&'a [f32]> {
        self.row_major
            .then(|| &self.data[i * self.cols..(i + 1) * self.cols])
    }

    /// Row-major copy of the view (borrowed when already row-major).
    pub fn to_row_major(&self) -> std::borrow::Cow<'a, [f32]> {
        if self.row_major {
            std::borrow::Cow::Borrowed(self.data)
        } else {
            let mut out = Vec::with_capacity(self.rows * self.cols);
            for i in 0..self.rows {
                for j in 0..self.cols {
                    out.push(self.data[j * self.rows + i]);
                }
            }
            std::borrow::Cow::Owned(out)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    #[inline]
    pub fn apply(self, x: f32, y: f32) -> f32 {
        match self {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div => x / y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }
}

/// Runs `f(row_index, row_slice)` over every row of `out`, either inline or
/// spread over `pool`.
pub(crate) fn for_each_row<F>(out: &mut [f32], cols: usize, pool: Option<&ThreadPool>, f: F)
where
    F: Fn(usize, &mut [f32]) + Sync + Send,
{
    if cols == 0 {
        return;
    }
    match pool {
        None => out
            .chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row)),
        Some(pool) => pool.install(|| {
            out.par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| f(i, row))
        }),
    }
}

/// `out = a op b`, with `b` either the same shape as `a` or a column vector
/// broadcast across `a`'s columns.
pub(crate) fn elementwise(
    op: BinaryOp,
    a: View<'_>,
    b: View<'_>,
    broadcast: bool,
    out: &mut [f32],
    pool: Option<&ThreadPool>,
) {
    let cols = a.cols;
    for_each_row(out, cols, pool, |i, row| {
        if broadcast {
            let y = b.at(i, 0);
            match a.row(i) {
                Some(ar) => row.iter_mut().zip(ar).for_each(|(o, &x)| *o = op.apply(x, y)),
                None => row
                    .iter_mut()
                    .enumerate()
                    .for_each(|(j, o)| *o = op.apply(a.at(i, j), y)),
            }
        } else {
            match (a.row(i), b.row(i)) {
                (Some(ar), Some(br)) => row
                    .iter_mut()
                    .zip(ar.iter().zip(br))
                    .for_each(|(o, (&x, &y))| *o = op.apply(x, y)),
                _ => row
                    .iter_mut()
                    .enumerate()
                    .for_each(|(j, o)| *o = op.apply(a.at(i, j), b.at(i, j))),
            }
        }
    });
}

pub(crate) fn scale(a: View<'_>, alpha: f32, out: &mut [f32], pool: Option<&ThreadPool>) {
    for_each_row(out, a.cols, pool, |i, row| {
        row.iter_mut()
            .enumerate()
            .for_each(|(j, o)| *o = alpha * a.at(i, j))
    });
}

/// `out = a * b` with f64 accumulation. Operands are packed to row-major first
/// so the inner loop streams both `b` and the accumulator.
pub(crate) fn matmul(a: View<'_>, b: View<'_>, out: &mut [f32], pool: Option<&ThreadPool>) {
    let inner = a.cols;
    let n = b.cols;
    let a_packed = a.to_row_major();
    let b_packed = b.to_row_major();
    let a_data: &[f32] = &a_packed;
    let b_data: &[f32] = &b_packed;
    let row_kernel = |i: usize, row: &mut [f32], acc: &mut Vec<f64>| {
        acc.clear();
        acc.resize(n, 0.0);
        let a_row = &a_data[i * inner..(i + 1) * inner];
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let aik = aik as f64;
            let b_row = &b_data[k * n..(k + 1) * n];
            for (s, &bkj) in acc.iter_mut().zip(b_row) {
                *s += aik * bkj as f64;
            }
        }
        for (o, &s) in row.iter_mut().zip(acc.iter()) {
            *o = s as f32;
        }
    };
    if n == 0 {
        return;
    }
    match pool {
        None => {
            let mut acc = Vec::with_capacity(n);
            out.chunks_mut(n)
                .enumerate()
                .for_each(|(i, row)| row_kernel(i, row, &mut acc));
        }
        Some(pool) => pool.install(|| {
            out.par_chunks_mut(n).enumerate().for_each_init(
                || Vec::with_capacity(n),
                |acc, (i, row)| row_kernel(i, row, acc),
            )
        }),
    }
}

/// Evaluates a compiled map program for every output element.
pub(crate) fn map(
    program: &Program,
    inputs: &[View<'_>],
    rows: usize,
    cols: usize,
    out: &mut [f32],
    pool: Option<&ThreadPool>,
) {
    let _ = rows;
    for_each_row(out, cols, pool, |i, row| {
        let mut stack = Vec::with_capacity(program.max_stack());
        let mut args = [0.0f32; 4];
        for (j, o) in row.iter_mut().enumerate() {
            for (slot, v) in args.iter_mut().zip(inputs) {
                *slot = v.at(i, j);
            }
            *o = program.eval(&args[..inputs.len()], (i * cols + j) as f32, &mut stack);
        }
    });
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMode {
    Valid,
    Same,
}

/// True 2D convolution (kernel flipped), defined through the full output:
/// `full(r, c) = sum A(m, n) K(r - m, c - n)`. Valid and same modes are
/// windows into it.
pub(crate) fn convolve2d(a: View<'_>, k: View<'_>, mode: ConvMode) -> (usize, usize, Vec<f32>) {
    let (out_rows, out_cols, off_r, off_c) = match mode {
        ConvMode::Valid => (
            a.rows - k.rows + 1,
            a.cols - k.cols + 1,
            k.rows - 1,
            k.cols - 1,
        ),
        ConvMode::Same => (a.rows, a.cols, (k.rows - 1) / 2, (k.cols - 1) / 2),
    };
    let mut out = vec![0.0f32; out_rows * out_cols];
    for i in 0..out_rows {
        for j in 0..out_cols {
            let r = i + off_r;
            let c = j + off_c;
            let mut acc = 0.0f64;
            for p in 0..k.rows {
                if p > r || r - p >= a.rows {
                    continue;
                }
                for q in 0..k.cols {
                    if q > c || c - q >= a.cols {
                        continue;
                    }
                    acc += a.at(r - p, c - q) as f64 * k.at(p, q) as f64;
                }
            }
            out[i * out_cols + j] = acc as f32;
        }
    }
    (out_rows, out_cols, out)
}
