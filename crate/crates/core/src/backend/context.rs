//! Context, command queue and device buffers of the parallel backend.
//!
//! A context owns one worker thread that drains an in-order command queue and
//! runs kernels on a private rayon pool. `execute` only enqueues; the host
//! blocks solely when it reads device data back (a sync point).

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use parking_lot::{Mutex, RwLock};
use rayon::ThreadPool;

use super::device::{DeviceDescriptor, DeviceKind};
use super::kernel::{builtin_sources, Kernel, KernelBody};
use super::mapgen;
use super::BackendError;
use crate::kernels::{self, View};
use crate::matrix::storage::{DeviceSlot, Storage};
use crate::matrix::Matrix;

static NEXT_CONTEXT_ID: AtomicU64 = AtomicU64::new(1);
static NEXT_BUFFER_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug, Default)]
pub struct ContextOptions {
    /// Simulated device memory size; allocations beyond it fail.
    pub memory_limit: Option<usize>,
    /// Worker threads for kernels (defaults to the device's parallel units).
    pub threads: Option<usize>,
}

#[derive(Default, Debug)]
struct Counters {
    uploads: AtomicU64,
    downloads: AtomicU64,
    syncs: AtomicU64,
    enqueued: AtomicU64,
    executed: AtomicU64,
    compiles: AtomicU64,
}

/// Snapshot of a context's transfer and queue accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContextStats {
    pub uploads: u64,
    pub downloads: u64,
    pub syncs: u64,
    pub enqueued: u64,
    pub executed: u64,
    pub compiles: u64,
}

enum Command {
    Run(Instruction),
    Fence(mpsc::SyncSender<()>),
}

#[derive(Debug)]
pub(crate) struct Queue {
    id: u64,
    sender: Mutex<mpsc::Sender<Command>>,
    counters: Arc<Counters>,
    allocated: AtomicUsize,
    memory_limit: Option<usize>,
}

impl std::fmt::Debug for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Command::Run(i) => write!(f, "Run({})", i.kernel.name),
            Command::Fence(_) => f.write_str("Fence"),
        }
    }
}

impl Queue {
    /// Blocks until every previously enqueued command has run.
    fn finish(&self) {
        self.counters.syncs.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::sync_channel(1);
        self.sender
            .lock()
            .send(Command::Fence(tx))
            .expect("device worker stopped");
        rx.recv().expect("device worker stopped");
    }

    fn submit(&self, instruction: Instruction) {
        self.counters.enqueued.fetch_add(1, Ordering::Relaxed);
        self.sender
            .lock()
            .send(Command::Run(instruction))
            .expect("device worker stopped");
    }
}

/// Device-side storage for one matrix.
#[derive(Debug)]
pub struct DeviceBuffer {
    id: u64,
    len: usize,
    mem: RwLock<Vec<f32>>,
    queue: Arc<Queue>,
}

impl DeviceBuffer {
    fn allocate(queue: &Arc<Queue>, len: usize) -> Result<Arc<Self>, BackendError> {
        let bytes = len * std::mem::size_of::<f32>();
        let before = queue.allocated.fetch_add(bytes, Ordering::SeqCst);
        if let Some(limit) = queue.memory_limit {
            if before + bytes > limit {
                queue.allocated.fetch_sub(bytes, Ordering::SeqCst);
                return Err(BackendError::Allocation {
                    requested: bytes,
                    available: limit.saturating_sub(before),
                });
            }
        }
        Ok(Arc::new(DeviceBuffer {
            id: NEXT_BUFFER_ID.fetch_add(1, Ordering::Relaxed),
            len,
            mem: RwLock::new(Vec::new()),
            queue: Arc::clone(queue),
        }))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn byte_length(&self) -> usize {
        self.len * std::mem::size_of::<f32>()
    }

    pub fn context_id(&self) -> u64 {
        self.queue.id
    }

    /// Flushes the owning queue and copies the device data into `host`.
    pub(crate) fn read_back(&self, host: &mut Vec<f32>) {
        self.queue.finish();
        host.clear();
        host.extend_from_slice(&self.mem.read());
        self.queue.counters.downloads.fetch_add(1, Ordering::Relaxed);
    }
}

impl Drop for DeviceBuffer {
    fn drop(&mut self) {
        self.queue
            .allocated
            .fetch_sub(self.byte_length(), Ordering::SeqCst);
    }
}

#[derive(Debug)]
struct Operand {
    buffer: Arc<DeviceBuffer>,
    rows: usize,
    cols: usize,
    row_major: bool,
}

#[derive(Debug)]
struct Instruction {
    kernel: Arc<Kernel>,
    operands: Vec<Operand>,
    scalars: Vec<f32>,
    output: Arc<DeviceBuffer>,
    out_rows: usize,
    out_cols: usize,
}

impl Instruction {
    fn run(&self, pool: &ThreadPool) {
        let guards: Vec<_> = self.operands.iter().map(|o| o.buffer.mem.read()).collect();
        let views: Vec<View<'_>> = self
            .operands
            .iter()
            .zip(&guards)
            .map(|(o, g)| View { data: g, rows: o.rows, cols: o.cols, row_major: o.row_major })
            .collect();
        let mut out = self.output.mem.write();
        out.clear();
        out.resize(self.out_rows * self.out_cols, 0.0);
        let pool = Some(pool);
        match &self.kernel.body {
            KernelBody::Elementwise(op) => kernels::elementwise(*op, views[0], views[1], false, &mut out, pool),
            KernelBody::Broadcast(op) => kernels::elementwise(*op, views[0], views[1], true, &mut out, pool),
            KernelBody::Matmul => kernels::matmul(views[0], views[1], &mut out, pool),
            KernelBody::Scale => kernels::scale(views[0], self.scalars[0], &mut out, pool),
            KernelBody::Map { program, .. } => {
                kernels::map(program, &views, self.out_rows, self.out_cols, &mut out, pool)
            }
        }
    }
}

/// Argument passed to [`ComputeContext::execute`].
#[derive(Clone, Copy, Debug)]
pub enum KernelArg<'a> {
    Matrix(&'a Matrix),
    Scalar(f32),
}

impl<'a> From<&'a Matrix> for KernelArg<'a> {
    fn from(m: &'a Matrix) -> Self {
        KernelArg::Matrix(m)
    }
}

/// Selected device, its command queue and the compiled-kernel cache.
#[derive(Debug)]
pub struct ComputeContext {
    device: DeviceDescriptor,
    queue: Arc<Queue>,
    kernels: Mutex<HashMap<(String, u64), Arc<Kernel>>>,
}

fn source_hash(source: &str) -> u64 {
    let mut h = DefaultHasher::new();
    source.hash(&mut h);
    h.finish()
}

impl ComputeContext {
    pub fn new(device: DeviceDescriptor, options: ContextOptions) -> Result<Arc<Self>, BackendError> {
        if device.device_kind == DeviceKind::Gpu {
            return Err(BackendError::Unavailable(format!(
                "no GPU runtime is available for {}",
                device.platform_name
            )));
        }
        let threads = options.threads.unwrap_or(device.max_parallel_units).max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("matcha-kernel-{i}"))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let id = NEXT_CONTEXT_ID.fetch_add(1, Ordering::Relaxed);
        let counters = Arc::new(Counters::default());
        let (tx, rx) = mpsc::channel::<Command>();
        let worker_counters = Arc::clone(&counters);
        std::thread::Builder::new()
            .name(format!("matcha-queue-{id}"))
            .spawn(move || {
                for cmd in rx {
                    match cmd {
                        Command::Run(instruction) => {
                            instruction.run(&pool);
                            worker_counters.executed.fetch_add(1, Ordering::Relaxed);
                        }
                        Command::Fence(done) => {
                            let _ = done.send(());
                        }
                    }
                }
            })
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let ctx = ComputeContext {
            device,
            queue: Arc::new(Queue {
                id,
                sender: Mutex::new(tx),
                counters,
                allocated: AtomicUsize::new(0),
                memory_limit: options.memory_limit,
            }),
            kernels: Mutex::new(HashMap::new()),
        };
        for (name, body) in builtin_sources() {
            ctx.compile(&name, &name, || Ok(body.clone()))?;
        }
        Ok(Arc::new(ctx))
    }

    pub fn id(&self) -> u64 {
        self.queue.id
    }

    pub fn device(&self) -> &DeviceDescriptor {
        &self.device
    }

    pub fn stats(&self) -> ContextStats {
        let c = &self.queue.counters;
        ContextStats {
            uploads: c.uploads.load(Ordering::Relaxed),
            downloads: c.downloads.load(Ordering::Relaxed),
            syncs: c.syncs.load(Ordering::Relaxed),
            enqueued: c.enqueued.load(Ordering::Relaxed),
            executed: c.executed.load(Ordering::Relaxed),
            compiles: c.compiles.load(Ordering::Relaxed),
        }
    }

    /// Bytes currently held in device buffers.
    pub fn allocated_bytes(&self) -> usize {
        self.queue.allocated.load(Ordering::SeqCst)
    }

    pub fn cached_kernels(&self) -> usize {
        self.kernels.lock().len()
    }

    pub fn builtin(&self, name: &str) -> Option<Arc<Kernel>> {
        self.kernels.lock().get(&(name.to_string(), source_hash(name))).cloned()
    }

    fn compile(
        &self,
        name: &str,
        source: &str,
        build: impl FnOnce() -> Result<KernelBody, BackendError>,
    ) -> Result<Arc<Kernel>, BackendError> {
        let key = (name.to_string(), source_hash(source));
        let mut cache = self.kernels.lock();
        if let Some(k) = cache.get(&key).filter(|k| k.source == source) {
            return Ok(Arc::clone(k));
        }
        let body = build()?;
        self.queue.counters.compiles.fetch_add(1, Ordering::Relaxed);
        let kernel = Arc::new(Kernel {
            name: name.to_string(),
            source: source.to_string(),
            body,
            context_id: self.id(),
        });
        cache.insert(key, Arc::clone(&kernel));
        Ok(kernel)
    }

    /// Compiles (or fetches from cache) an elementwise map kernel.
    pub fn compile_map(&self, expression: &str, arity: usize) -> Result<Arc<Kernel>, BackendError> {
        self.compile(&format!("map{arity}"), expression, || {
            let program = mapgen::compile(expression, arity)?;
            Ok(KernelBody::Map { program: Arc::new(program), arity })
        })
    }

    /// Whether `m` has a copy in this context holding newer data than the host.
    pub fn is_dirty_here(&self, m: &Matrix) -> bool {
        let st = m.storage.state.read();
        st.device
            .as_ref()
            .is_some_and(|s| s.dirty_on_device && s.buffer.context_id() == self.id())
    }

    fn resident_buffer(&self, m: &Matrix) -> Result<Arc<DeviceBuffer>, BackendError> {
        {
            let st = m.storage.state.read();
            if let Some(slot) = st.device.as_ref().filter(|s| s.buffer.context_id() == self.id()) {
                return Ok(Arc::clone(&slot.buffer));
            }
        }
        let mut st = m.storage.state.write();
        if let Some(slot) = st.device.as_ref().filter(|s| s.buffer.context_id() == self.id()) {
            return Ok(Arc::clone(&slot.buffer));
        }
        // Newer data may still sit in another context.
        st.download();
        let buffer = DeviceBuffer::allocate(&self.queue, st.host.len())?;
        buffer.mem.write().clone_from(&st.host);
        self.queue.counters.uploads.fetch_add(1, Ordering::Relaxed);
        st.device = Some(DeviceSlot { buffer: Arc::clone(&buffer), dirty_on_device: false });
        Ok(buffer)
    }

    /// Copies `m` to this device. No-op when it already has a copy here.
    pub fn upload(&self, m: &Matrix) -> Result<(), BackendError> {
        self.resident_buffer(m).map(|_| ())
    }

    /// Synchronizes and copies newer device data back to the host. No-op for
    /// matrices whose host buffer is current.
    pub fn download(&self, m: &Matrix) {
        if self.is_dirty_here(m) {
            m.storage.state.write().download();
        }
    }

    /// Validates arguments, uploads inputs that are not yet resident, and
    /// enqueues the kernel. Returns immediately with a device-resident output
    /// matrix; its data is produced asynchronously.
    pub fn execute(
        &self,
        kernel: &Arc<Kernel>,
        args: &[KernelArg<'_>],
        global_size: usize,
    ) -> Result<Matrix, BackendError> {
        if kernel.context_id != self.id() {
            return Err(BackendError::Argument(format!(
                "kernel `{}` belongs to another context",
                kernel.name
            )));
        }
        let matrices: Vec<&Matrix> = args
            .iter()
            .filter_map(|a| match a {
                KernelArg::Matrix(m) => Some(*m),
                KernelArg::Scalar(_) => None,
            })
            .collect();
        let scalars: Vec<f32> = args
            .iter()
            .filter_map(|a| match a {
                KernelArg::Scalar(s) => Some(*s),
                KernelArg::Matrix(_) => None,
            })
            .collect();
        if matrices.len() != kernel.matrix_arity() || scalars.len() != kernel.scalar_arity() {
            return Err(BackendError::Argument(format!(
                "kernel `{}` takes {} matrix and {} scalar arguments, got {} and {}",
                kernel.name,
                kernel.matrix_arity(),
                kernel.scalar_arity(),
                matrices.len(),
                scalars.len()
            )));
        }
        let shapes: Vec<(usize, usize)> = matrices.iter().map(|m| m.shape()).collect();
        let (out_rows, out_cols) = kernel
            .output_shape(&shapes)
            .map_err(|e| BackendError::Argument(format!("kernel `{}`: {e}", kernel.name)))?;
        if global_size < out_rows * out_cols {
            return Err(BackendError::Argument(format!(
                "global size {global_size} smaller than output size {}",
                out_rows * out_cols
            )));
        }
        let mut operands = Vec::with_capacity(matrices.len());
        for m in &matrices {
            operands.push(Operand {
                buffer: self.resident_buffer(m)?,
                rows: m.rows(),
                cols: m.cols(),
                row_major: m.is_row_major(),
            });
        }
        let output = DeviceBuffer::allocate(&self.queue, out_rows * out_cols)?;
        let result = Matrix::from_storage(out_rows, out_cols, true, Arc::new(Storage::on_device(Arc::clone(&output))));
        self.queue.submit(Instruction {
            kernel: Arc::clone(kernel),
            operands,
            scalars,
            output,
            out_rows,
            out_cols,
        });
        Ok(result)
    }
}
