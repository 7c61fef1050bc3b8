//! The four benchmark tasks and a timing harness that runs them on the
//! sequential and parallel backends.
//!
//! Every timed sample covers the task body plus the download of its
//! outputs, so device work is included in full. One untimed warm-up run per
//! (task, backend) precedes measurement; inputs are regenerated (untimed)
//! before each run so uploads are timed too.

use std::fmt::{self, Write as _};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{self, init_default_context, Engine};
use crate::matrix::{Matrix, MatrixError};

pub const DEFAULT_REPETITIONS: usize = 5;
/// Relative checksum tolerance between backends.
pub const CHECKSUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("{task} on {backend}: timing stopped while results were still on the device")]
    Protocol { task: TaskId, backend: String },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskId {
    Task1,
    Task2,
    Task3,
    Task4,
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskId::Task1 => "task1",
            TaskId::Task2 => "task2",
            TaskId::Task3 => "task3",
            TaskId::Task4 => "task4",
        })
    }
}

type Body = fn(&[Matrix]) -> Result<Vec<Matrix>, MatrixError>;

/// A seeded input generator and a body computing output matrices; the last
/// output is the task's primary result.
#[derive(Clone)]
pub struct BenchmarkTask {
    pub id: TaskId,
    pub description: &'static str,
    input_shapes: &'static [(usize, usize)],
    body: Body,
}

impl fmt::Debug for BenchmarkTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkTask").field("id", &self.id).field("description", &self.description).finish()
    }
}

impl BenchmarkTask {
    /// Uniform `[0, 1)` inputs; input `k` uses seed `seed + k`.
    pub fn inputs(&self, seed: u64) -> Vec<Matrix> {
        self.input_shapes
            .iter()
            .enumerate()
            .map(|(k, &(r, c))| Matrix::random(r, c, Some(seed.wrapping_add(k as u64))).expect("non-empty shape"))
            .collect()
    }

    pub fn run(&self, inputs: &[Matrix]) -> Result<Vec<Matrix>, MatrixError> {
        (self.body)(inputs)
    }
}

fn task1(m: &[Matrix]) -> Result<Vec<Matrix>, MatrixError> {
    Ok(vec![m[0].add(&m[1])?])
}

fn product(m: &[Matrix]) -> Result<Vec<Matrix>, MatrixError> {
    Ok(vec![m[0].matmul(&m[1])?])
}

/// A: (200×500)·(500×200); B: A + a broadcast 200×1 column;
/// C: (200×500)ᵀ·(200×50).
fn task4(m: &[Matrix]) -> Result<Vec<Matrix>, MatrixError> {
    let a = m[0].matmul(&m[1])?;
    let b = a.add(&m[2])?;
    let c = m[0].t().matmul(&m[3])?;
    Ok(vec![b, c])
}

pub fn define_tasks() -> Vec<BenchmarkTask> {
    vec![
        BenchmarkTask {
            id: TaskId::Task1,
            description: "add two 1000x1000 matrices",
            input_shapes: &[(1000, 1000), (1000, 1000)],
            body: task1,
        },
        BenchmarkTask {
            id: TaskId::Task2,
            description: "multiply 1000x100 by 100x10",
            input_shapes: &[(1000, 100), (100, 10)],
            body: product,
        },
        BenchmarkTask {
            id: TaskId::Task3,
            description: "multiply 1000x100 by 100x1000",
            input_shapes: &[(1000, 100), (100, 1000)],
            body: product,
        },
        BenchmarkTask {
            id: TaskId::Task4,
            description: "200x500 product, column broadcast add, transposed product",
            input_shapes: &[(200, 500), (500, 200), (200, 1), (200, 50)],
            body: task4,
        },
    ]
}

/// A named backend column; `engine` is `None` when it could not start.
#[derive(Clone)]
pub struct BenchBackend {
    pub name: String,
    pub engine: Result<Arc<Engine>, String>,
}

impl BenchBackend {
    pub fn sequential() -> Self {
        BenchBackend { name: "seq".into(), engine: Ok(Engine::sequential()) }
    }

    /// Every operation on the default parallel device.
    pub fn parallel() -> Self {
        let engine = init_default_context().map(|ctx| Engine::with_context(ctx, 0)).map_err(|e| e.to_string());
        BenchBackend { name: "parallel".into(), engine }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub repetitions: usize,
    pub seed: u64,
    /// Download outputs inside the timed region. Turning this off violates
    /// the protocol and makes device runs fail with [`BenchError::Protocol`].
    pub final_sync: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { repetitions: DEFAULT_REPETITIONS, seed: 0, final_sync: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskTiming {
    pub id: TaskId,
    pub backend: String,
    /// `None` when the backend was unavailable.
    pub mean_ms: Option<f64>,
    pub times_ms: Vec<f64>,
    pub checksum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unavailable: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub host: String,
    pub tasks: Vec<TaskTiming>,
}

/// Description of the machine running the benchmark.
pub fn host_description() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{}, {} logical CPU{}", std::env::consts::OS, std::env::consts::ARCH, cpus, if cpus == 1 { "" } else { "s" })
}

fn sync_and_sum(outputs: &[Matrix]) -> f64 {
    outputs.iter().map(|m| m.to_vec().iter().map(|&v| v as f64).sum::<f64>()).sum()
}

fn measure(task: &BenchmarkTask, backend: &str, opts: &RunOptions) -> Result<(Vec<f64>, f64), BenchError> {
    let warm = task.run(&task.inputs(opts.seed))?;
    let checksum = sync_and_sum(&warm);
    let mut times = Vec::with_capacity(opts.repetitions);
    for _ in 0..opts.repetitions {
        let inputs = task.inputs(opts.seed);
        let start = Instant::now();
        let outputs = task.run(&inputs)?;
        if opts.final_sync {
            sync_and_sum(&outputs);
        }
        times.push(start.elapsed().as_secs_f64() * 1e3);
        if outputs.iter().any(Matrix::is_device_dirty) {
            return Err(BenchError::Protocol { task: task.id, backend: backend.to_owned() });
        }
    }
    Ok((times, checksum))
}

/// Times every task on every backend, one task at a time.
pub fn run(tasks: &[BenchmarkTask], backends: &[BenchBackend], opts: &RunOptions) -> Result<TimingReport, BenchError> {
    if opts.repetitions == 0 {
        return Err(BenchError::Config("repetitions must be at least 1".into()));
    }
    let mut timings = Vec::new();
    for task in tasks {
        for b in backends {
            let timing = match &b.engine {
                Ok(engine) => {
                    let (times, checksum) = backend::with_engine(engine, || measure(task, &b.name, opts))?;
                    TaskTiming {
                        id: task.id,
                        backend: b.name.clone(),
                        mean_ms: Some(times.iter().sum::<f64>() / times.len() as f64),
                        times_ms: times,
                        checksum: Some(checksum),
                        unavailable: None,
                    }
                }
                Err(reason) => TaskTiming {
                    id: task.id,
                    backend: b.name.clone(),
                    mean_ms: None,
                    times_ms: Vec::new(),
                    checksum: None,
                    unavailable: Some(reason.clone()),
                },
            };
            timings.push(timing);
        }
    }
    Ok(TimingReport { host: host_description(), tasks: timings })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl TimingReport {
    pub fn timing(&self, id: TaskId, backend: &str) -> Option<&TaskTiming> {
        self.tasks.iter().find(|t| t.id == id && t.backend == backend)
    }

    /// Tasks whose checksums differ between backends by more than
    /// [`CHECKSUM_TOLERANCE`] relative.
    pub fn checksum_mismatches(&self) -> Vec<TaskId> {
        let mut bad = Vec::new();
        for t in &self.tasks {
            let Some(reference) = self.tasks.iter().find(|r| r.id == t.id).and_then(|r| r.checksum) else {
                continue;
            };
            if let Some(c) = t.checksum {
                if relative_gap(reference, c) > CHECKSUM_TOLERANCE && !bad.contains(&t.id) {
                    bad.push(t.id);
                }
            }
        }
        bad
    }

    /// Whether the parallel mean on task 3 is at most the sequential mean;
    /// `None` if either backend is missing.
    pub fn task3_direction_ok(&self) -> Option<bool> {
        let seq = self.timing(TaskId::Task3, "seq")?.mean_ms?;
        let par = self.timing(TaskId::Task3, "parallel")?.mean_ms?;
        Some(par <= seq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table, one row per task and one column per backend.
    pub fn to_table(&self) -> String {
        let mut backends: Vec<&str> = Vec::new();
        let mut ids: Vec<TaskId> = Vec::new();
        for t in &self.tasks {
            if !backends.contains(&t.backend.as_str()) {
                backends.push(&t.backend);
            }
            if !ids.contains(&t.id) {
                ids.push(t.id);
            }
        }
        let tasks = define_tasks();
        let mut out = String::new();
        let _ = writeln!(out, "host: {}", self.host);
        let _ = write!(out, "{:<7} {:<58}", "task", "description");
        for b in &backends {
            let _ = write!(out, " {:>16}", format!("{b} mean (ms)"));
        }
        let _ = writeln!(out, " {:>16}", "checksum");
        for id in ids {
            let desc = tasks.iter().find(|t| t.id == id).map_or("", |t| t.description);
            let _ = write!(out, "{:<7} {:<58}", id.to_string(), desc);
            let mut checksum = None;
            for b in &backends {
                let cell = match self.timing(id, b) {
                    Some(TaskTiming { mean_ms: Some(m), checksum: c, .. }) => {
                        checksum = checksum.or(*c);
                        format!("{m:.3}")
                    }
                    _ => "unavailable".to_owned(),
                };
                let _ = write!(out, " {cell:>16}");
            }
            let _ = writeln!(out, " {:>16}", checksum.map_or("-".to_owned(), |c| format!("{c:.6e}")));
        }
        for id in self.checksum_mismatches() {
            let _ = writeln!(out, "WARNING: {id} checksums differ between backends");
        }
        if self.task3_direction_ok() == Some(false) {
            let _ = writeln!(out, "WARNING: task3 parallel mean exceeds sequential mean");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_shapes() {
        let tasks = define_tasks();
        assert_eq!(tasks.len(), 4);
        let shapes: Vec<(usize, usize)> = tasks
            .iter()
            .map(|t| t.run(&t.inputs(1)).unwrap().last().unwrap().shape())
            .collect();
        assert_eq!(shapes, vec![(1000, 1000), (1000, 10), (1000, 1000), (500, 50)]);
        let t4 = tasks[3].run(&tasks[3].inputs(1)).unwrap();
        assert_eq!(t4[0].shape(), (200, 200));
    }

    #[test]
    fn generator_is_seeded() {
        let t = &define_tasks()[1];
        let (a, b) = (t.inputs(9), t.inputs(9));
        assert!(a.iter().zip(&b).all(|(x, y)| x.values_eq(y)));
        assert!(!a[0].values_eq(&t.inputs(10)[0]));
        assert!(a[0].to_vec().iter().all(|&v| (0.0..1.0).contains(&v)));
    }
}
