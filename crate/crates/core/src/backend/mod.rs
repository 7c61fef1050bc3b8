//! Compute backends and dispatch.
//!
//! The sequential path is the reference implementation. The parallel path is
//! a [`ComputeContext`]: a device picked by priority, a command queue drained
//! by a worker, a kernel cache and device-resident buffers. An [`Engine`]
//! decides per call which path runs: the parallel one when a context is
//! installed and either the output has at least `threshold` elements or an
//! input already lives on the device.
//!
//! Matrix methods use the engine returned by [`current`]: a scoped override
//! installed with [`with_engine`] on this thread, else the process-wide engine
//! configured from `MATCHA_BACKEND` / `MATCHA_DISPATCH_THRESHOLD` on first use
//! or replaced through [`install_overrides`].

pub mod context;
pub mod device;
pub mod kernel;
pub mod mapgen;

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;
use thiserror::Error;

pub use self::context::{ComputeContext, ContextOptions, ContextStats, DeviceBuffer, KernelArg};
pub use self::device::{enumerate_devices, order_devices, select_device, DeviceDescriptor, DeviceKind};
pub use self::kernel::{Kernel, KernelBody};
pub use self::mapgen::Program;
use crate::kernels::{self, BinaryOp};
use crate::matrix::{Matrix, MatrixError};

pub const DEFAULT_DISPATCH_THRESHOLD: usize = 4096;
pub const ENV_BACKEND: &str = "MATCHA_BACKEND";
pub const ENV_THRESHOLD: &str = "MATCHA_DISPATCH_THRESHOLD";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("compute backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("kernel argument error: {0}")]
    Argument(String),
    #[error("kernel compile error at offset {position} near `{token}`: {message}")]
    Compile {
        position: usize,
        token: String,
        message: String,
    },
    #[error("device allocation of {requested} bytes failed ({available} bytes free)")]
    Allocation { requested: usize, available: usize },
}

/// Initializes a context on `device` with default options.
pub fn init_context(device: &DeviceDescriptor) -> Result<Arc<ComputeContext>, BackendError> {
    ComputeContext::new(device.clone(), ContextOptions::default())
}

/// Discovers devices, picks the highest-priority one and initializes it.
pub fn init_default_context() -> Result<Arc<ComputeContext>, BackendError> {
    init_context(&select_device(&enumerate_devices())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    Seq,
    Parallel,
    Auto,
}

impl FromStr for BackendChoice {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "seq" | "sequential" => Ok(BackendChoice::Seq),
            "parallel" | "par" => Ok(BackendChoice::Parallel),
            "auto" => Ok(BackendChoice::Auto),
            other => Err(BackendError::Config(format!(
                "unknown backend `{other}` (expected seq, parallel or auto)"
            ))),
        }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendChoice::Seq => "seq",
            BackendChoice::Parallel => "parallel",
            BackendChoice::Auto => "auto",
        })
    }
}

/// Backend choice and dispatch threshold read from the environment.
pub fn env_config() -> Result<(BackendChoice, usize), BackendError> {
    let choice = match std::env::var(ENV_BACKEND) {
        Ok(v) if !v.trim().is_empty() => v.parse()?,
        _ => BackendChoice::Auto,
    };
    let threshold = match std::env::var(ENV_THRESHOLD) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse::<usize>().map_err(|_| {
            BackendError::Config(format!("{ENV_THRESHOLD} must be a non-negative integer, got `{v}`"))
        })?,
        _ => DEFAULT_DISPATCH_THRESHOLD,
    };
    Ok((choice, threshold))
}

/// Which path an operation took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Sequential,
    Parallel,
}

/// Per-call dispatch between the sequential path and an optional context.
#[derive(Debug)]
pub struct Engine {
    context: Option<Arc<ComputeContext>>,
    threshold: usize,
    sequential_calls: AtomicU64,
    parallel_calls: AtomicU64,
}

impl Engine {
    pub fn sequential() -> Arc<Engine> {
        Arc::new(Engine::build(None, DEFAULT_DISPATCH_THRESHOLD))
    }

    pub fn with_context(context: Arc<ComputeContext>, threshold: usize) -> Arc<Engine> {
        Arc::new(Engine::build(Some(context), threshold))
    }

    fn build(context: Option<Arc<ComputeContext>>, threshold: usize) -> Engine {
        Engine {
            context,
            threshold,
            sequential_calls: AtomicU64::new(0),
            parallel_calls: AtomicU64::new(0),
        }
    }

    /// `Seq` never starts a context. `Parallel` sends every dispatchable
    /// call to the device; `Auto` applies `threshold`. Both fall back to
    /// sequential if no device initializes.
    pub fn for_choice(choice: BackendChoice, threshold: usize) -> Arc<Engine> {
        let threshold = match choice {
            BackendChoice::Seq => return Engine::sequential(),
            BackendChoice::Parallel => 0,
            BackendChoice::Auto => threshold,
        };
        match init_default_context() {
            Ok(ctx) => Engine::with_context(ctx, threshold),
            Err(_) => Engine::sequential(),
        }
    }

    pub fn from_env() -> Result<Arc<Engine>, BackendError> {
        let (choice, threshold) = env_config()?;
        Ok(Engine::for_choice(choice, threshold))
    }

    pub fn context(&self) -> Option<&Arc<ComputeContext>> {
        self.context.as_ref()
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn has_parallel(&self) -> bool {
        self.context.is_some()
    }

    /// (sequential, parallel) call counts so far.
    pub fn route_counts(&self) -> (u64, u64) {
        (
            self.sequential_calls.load(Ordering::Relaxed),
            self.parallel_calls.load(Ordering::Relaxed),
        )
    }

    pub fn route(&self, output_elements: usize, inputs: &[&Matrix]) -> Route {
        match &self.context {
            Some(ctx) if output_elements >= self.threshold || inputs.iter().any(|m| ctx.is_dirty_here(m)) => {
                Route::Parallel
            }
            _ => Route::Sequential,
        }
    }

    fn dispatch(
        &self,
        output_elements: usize,
        inputs: &[&Matrix],
        parallel: impl FnOnce(&Arc<ComputeContext>) -> Result<Matrix, BackendError>,
        sequential: impl FnOnce() -> Result<Matrix, MatrixError>,
    ) -> Result<Matrix, MatrixError> {
        if let (Route::Parallel, Some(ctx)) = (self.route(output_elements, inputs), &self.context) {
            match parallel(ctx) {
                Ok(m) => {
                    self.parallel_calls.fetch_add(1, Ordering::Relaxed);
                    return Ok(m);
                }
                // Out of device memory: inputs stay valid on the host.
                Err(BackendError::Allocation { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.sequential_calls.fetch_add(1, Ordering::Relaxed);
        sequential()
    }

    fn builtin(ctx: &ComputeContext, name: &str) -> Result<Arc<Kernel>, BackendError> {
        ctx.builtin(name)
            .ok_or_else(|| BackendError::Unavailable(format!("built-in kernel `{name}` missing")))
    }

    pub fn elementwise(&self, op: BinaryOp, a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
        let broadcast = if a.shape() == b.shape() {
            false
        } else if b.cols() == 1 && b.rows() == a.rows() {
            true
        } else {
            return Err(MatrixError::Shape { op: op.name(), left: a.shape(), right: b.shape() });
        };
        let n = a.len();
        self.dispatch(
            n,
            &[a, b],
            |ctx| {
                let name = if broadcast { format!("broadcast_{}", op.name()) } else { op.name().to_string() };
                ctx.execute(&Self::builtin(ctx, &name)?, &[a.into(), b.into()], n)
            },
            || {
                let mut out = vec![0.0; n];
                a.with_view(|av| b.with_view(|bv| kernels::elementwise(op, av, bv, broadcast, &mut out, None)));
                Matrix::from_vec(a.rows(), a.cols(), out)
            },
        )
    }

    pub fn scale(&self, a: &Matrix, alpha: f32) -> Result<Matrix, MatrixError> {
        let n = a.len();
        self.dispatch(
            n,
            &[a],
            |ctx| ctx.execute(&Self::builtin(ctx, "scale")?, &[a.into(), KernelArg::Scalar(alpha)], n),
            || {
                let mut out = vec![0.0; n];
                a.with_view(|av| kernels::scale(av, alpha, &mut out, None));
                Matrix::from_vec(a.rows(), a.cols(), out)
            },
        )
    }

    pub fn matmul(&self, a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
        if a.cols() != b.rows() {
            return Err(MatrixError::Shape { op: "matmul", left: a.shape(), right: b.shape() });
        }
        let n = a.rows() * b.cols();
        self.dispatch(
            n,
            &[a, b],
            |ctx| ctx.execute(&Self::builtin(ctx, "matmul")?, &[a.into(), b.into()], n),
            || {
                let mut out = vec![0.0; n];
                a.with_view(|av| b.with_view(|bv| kernels::matmul(av, bv, &mut out, None)));
                Matrix::from_vec(a.rows(), b.cols(), out)
            },
        )
    }

    /// Compiles `expression` into a reusable elementwise operation bound to
    /// this engine's dispatch rule. Invalid expressions are rejected here.
    pub fn map_generator(self: &Arc<Self>, expression: &str, arity: usize) -> Result<MapKernelSpec, BackendError> {
        let program = Arc::new(mapgen::compile(expression, arity)?);
        let kernel = match &self.context {
            Some(ctx) => Some(ctx.compile_map(expression, arity)?),
            None => None,
        };
        Ok(MapKernelSpec {
            expression: expression.to_string(),
            arity,
            program,
            kernel,
            engine: Arc::clone(self),
        })
    }
}

/// A compiled elementwise map: `out[i] = expression(a[i], b[i], ...)`.
#[derive(Debug, Clone)]
pub struct MapKernelSpec {
    expression: String,
    arity: usize,
    program: Arc<Program>,
    kernel: Option<Arc<Kernel>>,
    engine: Arc<Engine>,
}

impl MapKernelSpec {
    pub fn expression(&self) -> &str {
        &self.expression
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Applies the map to `arity` matrices of identical shape.
    pub fn apply(&self, inputs: &[&Matrix]) -> Result<Matrix, MatrixError> {
        if inputs.len() != self.arity {
            return Err(BackendError::Argument(format!(
                "map `{}` takes {} inputs, got {}",
                self.expression,
                self.arity,
                inputs.len()
            ))
            .into());
        }
        let first = inputs[0];
        if let Some(m) = inputs.iter().find(|m| m.shape() != first.shape()) {
            return Err(MatrixError::Shape { op: "map", left: first.shape(), right: m.shape() });
        }
        let n = first.len();
        self.engine.dispatch(
            n,
            inputs,
            |ctx| {
                let kernel = self
                    .kernel
                    .as_ref()
                    .ok_or_else(|| BackendError::Unavailable("map kernel not compiled".into()))?;
                let args: Vec<KernelArg<'_>> = inputs.iter().map(|&m| KernelArg::Matrix(m)).collect();
                ctx.execute(kernel, &args, n)
            },
            || {
                let guards: Vec<_> = inputs.iter().map(|m| m.storage.read_host()).collect();
                let views: Vec<_> = inputs
                    .iter()
                    .zip(&guards)
                    .map(|(m, g)| kernels::View { data: g, rows: m.rows(), cols: m.cols(), row_major: m.is_row_major() })
                    .collect();
                let mut out = vec![0.0; n];
                kernels::map(&self.program, &views, first.rows(), first.cols(), &mut out, None);
                Matrix::from_vec(first.rows(), first.cols(), out)
            },
        )
    }

    /// Single-input convenience for `apply(&[input])`.
    pub fn call(&self, input: &Matrix) -> Result<Matrix, MatrixError> {
        self.apply(&[input])
    }
}

impl ComputeContext {
    /// Map kernel that always runs on this context.
    pub fn map_generator(self: &Arc<Self>, expression: &str, arity: usize) -> Result<MapKernelSpec, BackendError> {
        Engine::with_context(Arc::clone(self), 0).map_generator(expression, arity)
    }
}

fn global() -> &'static RwLock<Arc<Engine>> {
    static GLOBAL: OnceLock<RwLock<Arc<Engine>>> = OnceLock::new();
    GLOBAL.get_or_init(|| RwLock::new(Engine::from_env().unwrap_or_else(|_| Engine::sequential())))
}

thread_local! {
    static SCOPED: RefCell<Vec<Arc<Engine>>> = const { RefCell::new(Vec::new()) };
}

/// Engine used by `Matrix` methods on this thread.
pub fn current() -> Arc<Engine> {
    SCOPED
        .with(|s| s.borrow().last().cloned())
        .unwrap_or_else(|| Arc::clone(&global().read()))
}

/// Runs `f` with `engine` as this thread's current engine.
pub fn with_engine<R>(engine: &Arc<Engine>, f: impl FnOnce() -> R) -> R {
    struct Pop;
    impl Drop for Pop {
        fn drop(&mut self) {
            SCOPED.with(|s| s.borrow_mut().pop());
        }
    }
    SCOPED.with(|s| s.borrow_mut().push(Arc::clone(engine)));
    let _pop = Pop;
    f()
}

/// Routes process-wide matrix ops at or above the threshold (from the
/// environment, default 4096 elements) through `ctx`.
pub fn install_overrides(ctx: Arc<ComputeContext>) {
    let threshold = env_config().map(|(_, t)| t).unwrap_or(DEFAULT_DISPATCH_THRESHOLD);
    install_engine(Engine::with_context(ctx, threshold));
}

/// Replaces the process-wide engine.
pub fn install_engine(engine: Arc<Engine>) {
    *global().write() = engine;
}

/// Back to sequential-only execution.
pub fn reset_overrides() {
    install_engine(Engine::sequential());
}
