//! C ABI over the matcha matrix library.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns a [`MatchaStatus`]; on failure a message is
//! available from [`matcha_last_error`] until the next call on the same
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use matcha::backend::{self, init_default_context, BackendChoice, ComputeContext, Engine};
use matcha::{BackendError, MapKernelSpec, Matrix, MatrixError, ReduceOp};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Shape = 4,
    Index = 5,
    Parse = 6,
    Compile = 7,
    Backend = 8,
    Panic = 9,
}

/// Reduction selector for [`matcha_matrix_reduce`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchaReduce {
    Min = 0,
    Max = 1,
    Sum = 2,
    Mean = 3,
}

/// Backend selector for [`matcha_set_backend`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchaBackend {
    Seq = 0,
    Parallel = 1,
    Auto = 2,
}

/// Opaque dense f32 matrix.
pub struct MatchaMatrix(Matrix);

/// Opaque compute context.
pub struct MatchaContext(Arc<ComputeContext>);

/// Opaque compiled elementwise map.
pub struct MatchaMap(MapKernelSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MatchaStatus, String);

impl From<MatrixError> for Failure {
    fn from(e: MatrixError) -> Self {
        let status = match &e {
            MatrixError::Dimension { .. } | MatrixError::Ragged { .. } => MatchaStatus::Dimension,
            MatrixError::Shape { .. } => MatchaStatus::Shape,
            MatrixError::Index { .. } => MatchaStatus::Index,
            MatrixError::Parse { .. } => MatchaStatus::Parse,
            MatrixError::Backend(b) => return Failure::from(b.clone()),
        };
        Failure(status, e.to_string())
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        let status = match e {
            BackendError::Compile { .. } => MatchaStatus::Compile,
            BackendError::Argument(_) => MatchaStatus::InvalidArgument,
            _ => MatchaStatus::Backend,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MatchaStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MatchaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MatchaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MatchaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = deref_mut(out, "output pointer")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(MatchaStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn matcha_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn matcha_status_str(status: MatchaStatus) -> *const c_char {
    let s: &'static CStr = match status {
        MatchaStatus::Ok => c"ok",
        MatchaStatus::NullPointer => c"null pointer",
        MatchaStatus::InvalidArgument => c"invalid argument",
        MatchaStatus::Dimension => c"invalid dimensions",
        MatchaStatus::Shape => c"shape mismatch",
        MatchaStatus::Index => c"index out of range",
        MatchaStatus::Parse => c"parse error",
        MatchaStatus::Compile => c"kernel compile error",
        MatchaStatus::Backend => c"backend error",
        MatchaStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Selects the process-wide backend. `threshold` is the minimum output size
/// dispatched to the parallel device under `Auto`.
#[no_mangle]
pub extern "C" fn matcha_set_backend(choice: MatchaBackend, threshold: usize) -> MatchaStatus {
    guard(|| {
        let choice = match choice {
            MatchaBackend::Seq => BackendChoice::Seq,
            MatchaBackend::Parallel => BackendChoice::Parallel,
            MatchaBackend::Auto => BackendChoice::Auto,
        };
        backend::install_engine(Engine::for_choice(choice, threshold));
        Ok(())
    })
}

/// Creates a `rows`×`cols` matrix from `rows*cols` values laid out row-major
/// (or column-major when `row_major` is false). `data` may be NULL for zeros.
///
/// # Safety
/// `data` must be NULL or point to `rows*cols` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f32,
    row_major: bool,
    out: *mut *mut MatchaMatrix,
) -> MatchaStatus {
    guard(|| {
        let m = if data.is_null() {
            Matrix::zeros(rows, cols)?
        } else {
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Failure(MatchaStatus::Dimension, format!("{rows}x{cols} overflows")))?;
            if n == 0 {
                return Err(MatrixError::Dimension { rows, cols }.into());
            }
            let values = std::slice::from_raw_parts(data, n).to_vec();
            Matrix::from_vec_with_layout(rows, cols, values, row_major)?
        };
        emit(out, MatchaMatrix(m))
    })
}

/// Uniform random matrix in [0, 1) from `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_random(rows: usize, cols: usize, seed: u64, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    guard(|| emit(out, MatchaMatrix(Matrix::random(rows, cols, Some(seed))?)))
}

/// Releases a matrix. NULL is ignored.
///
/// # Safety
/// `m` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_free(m: *mut MatchaMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_shape(m: *const MatchaMatrix, rows: *mut usize, cols: *mut usize) -> MatchaStatus {
    guard(|| {
        let (r, c) = deref(m, "matrix")?.0.shape();
        *deref_mut(rows, "rows")? = r;
        *deref_mut(cols, "cols")? = c;
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_get(m: *const MatchaMatrix, i: usize, j: usize, value: *mut f32) -> MatchaStatus {
    guard(|| {
        let v = deref(m, "matrix")?.0.get(i, j)?;
        *deref_mut(value, "value")? = v;
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_set(m: *mut MatchaMatrix, i: usize, j: usize, value: f32) -> MatchaStatus {
    guard(|| Ok(deref_mut(m, "matrix")?.0.set(i, j, value)?))
}

/// Copies all values, row-major, into `buffer` of `len` floats.
///
/// # Safety
/// `m` must be a live handle; `buffer` must have room for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_copy_to(m: *const MatchaMatrix, buffer: *mut f32, len: usize) -> MatchaStatus {
    guard(|| {
        let values = deref(m, "matrix")?.0.to_vec();
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if len < values.len() {
            return Err(Failure(
                MatchaStatus::InvalidArgument,
                format!("buffer holds {len} floats, need {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
        Ok(())
    })
}

unsafe fn binary(
    a: *const MatchaMatrix,
    b: *const MatchaMatrix,
    out: *mut *mut MatchaMatrix,
    op: impl FnOnce(&Matrix, &Matrix) -> Result<Matrix, MatrixError>,
) -> MatchaStatus {
    guard(|| {
        let r = op(&deref(a, "left operand")?.0, &deref(b, "right operand")?.0)?;
        emit(out, MatchaMatrix(r))
    })
}

/// `out = a + b`; an n×1 `b` broadcasts across columns.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_add(a: *const MatchaMatrix, b: *const MatchaMatrix, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    binary(a, b, out, Matrix::add)
}

/// `out = a - b`.
///
/// # Safety
/// See [`matcha_matrix_add`].
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_sub(a: *const MatchaMatrix, b: *const MatchaMatrix, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    binary(a, b, out, Matrix::sub)
}

/// Elementwise product.
///
/// # Safety
/// See [`matcha_matrix_add`].
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_mul(a: *const MatchaMatrix, b: *const MatchaMatrix, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    binary(a, b, out, Matrix::mul)
}

/// Elementwise quotient.
///
/// # Safety
/// See [`matcha_matrix_add`].
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_div(a: *const MatchaMatrix, b: *const MatchaMatrix, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    binary(a, b, out, Matrix::div)
}

/// Matrix product.
///
/// # Safety
/// See [`matcha_matrix_add`].
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_matmul(a: *const MatchaMatrix, b: *const MatchaMatrix, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    binary(a, b, out, Matrix::matmul)
}

/// `out = alpha * a`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_scale(a: *const MatchaMatrix, alpha: f32, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    guard(|| emit(out, MatchaMatrix(deref(a, "matrix")?.0.scale(alpha)?)))
}

/// O(1) transposed view sharing storage with `a`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_transpose(a: *const MatchaMatrix, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    guard(|| emit(out, MatchaMatrix(deref(a, "matrix")?.0.t())))
}

/// # Safety
/// `a` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_reduce(a: *const MatchaMatrix, op: MatchaReduce, value: *mut f32) -> MatchaStatus {
    guard(|| {
        let op = match op {
            MatchaReduce::Min => ReduceOp::Min,
            MatchaReduce::Max => ReduceOp::Max,
            MatchaReduce::Sum => ReduceOp::Sum,
            MatchaReduce::Mean => ReduceOp::Mean,
        };
        let v = deref(a, "matrix")?.0.reduce(op);
        *deref_mut(value, "value")? = v;
        Ok(())
    })
}

/// JSON text of `a`, released with [`matcha_string_free`].
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_to_json(a: *const MatchaMatrix, out: *mut *mut c_char) -> MatchaStatus {
    guard(|| {
        let json = CString::new(deref(a, "matrix")?.0.to_json())
            .map_err(|e| Failure(MatchaStatus::Backend, e.to_string()))?;
        *deref_mut(out, "output pointer")? = json.into_raw();
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_matrix_from_json(json: *const c_char, out: *mut *mut MatchaMatrix) -> MatchaStatus {
    guard(|| emit(out, MatchaMatrix(Matrix::from_json(text(json, "json")?)?)))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn matcha_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Context on the first available compute device.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_context_new(out: *mut *mut MatchaContext) -> MatchaStatus {
    guard(|| emit(out, MatchaContext(init_default_context()?)))
}

/// Releases a context. Matrices computed on it stay valid.
///
/// # Safety
/// `ctx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn matcha_context_free(ctx: *mut MatchaContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Compiles an elementwise map over `arity` inputs named `a`..`d`, e.g.
/// `"a[i] * b[i] + 1.0"`. With a NULL `ctx` it follows the current backend.
///
/// # Safety
/// `ctx` must be NULL or live; `expression` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_map_new(
    ctx: *const MatchaContext,
    expression: *const c_char,
    arity: usize,
    out: *mut *mut MatchaMap,
) -> MatchaStatus {
    guard(|| {
        let expression = text(expression, "expression")?;
        let spec = match ctx.as_ref() {
            Some(c) => c.0.map_generator(expression, arity)?,
            None => backend::current().map_generator(expression, arity)?,
        };
        emit(out, MatchaMap(spec))
    })
}

/// Applies a map to `count` same-shape inputs.
///
/// # Safety
/// `map` must be live; `inputs` must hold `count` live matrix handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn matcha_map_apply(
    map: *const MatchaMap,
    inputs: *const *const MatchaMatrix,
    count: usize,
    out: *mut *mut MatchaMatrix,
) -> MatchaStatus {
    guard(|| {
        let map = deref(map, "map")?;
        if inputs.is_null() {
            return Err(null("inputs"));
        }
        let handles = std::slice::from_raw_parts(inputs, count);
        let matrices = handles
            .iter()
            .map(|&h| deref(h, "input matrix").map(|m| &m.0))
            .collect::<Result<Vec<_>, _>>()?;
        emit(out, MatchaMatrix(map.0.apply(&matrices)?))
    })
}

/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn matcha_map_free(map: *mut MatchaMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}
