//! Command-line front end: benchmarks, the demo figures and device info.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration or
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::backend::{self, enumerate_devices, env_config, init_default_context, select_device, BackendChoice, Engine};
use crate::bench::{self, BenchBackend, RunOptions};
use crate::demo;
use crate::plot::{Figure, DEFAULT_HEIGHT, DEFAULT_WIDTH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Seq,
    Parallel,
    Auto,
}

impl From<BackendArg> for BackendChoice {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Seq => BackendChoice::Seq,
            BackendArg::Parallel => BackendChoice::Parallel,
            BackendArg::Auto => BackendChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Time the four benchmark tasks and write bench.json
    Bench,
    /// Gaussian mixture density map (demo-gmm.svg)
    DemoGmm,
    /// k-nearest-neighbour decision boundary (demo-knn.svg)
    DemoKnn,
    /// Perceptron and SGD-SVM decision boundaries (demo-sgd.svg)
    DemoSgd,
    /// List compute devices and the selected backend
    Matinfo,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "matcha", version, about = "Matrix backends, classical ML demos and benchmarks")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Compute backend; defaults to MATCHA_BACKEND, then auto
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for SVG and JSON files
    #[arg(long = "out", global = true, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, default_value_t = bench::DEFAULT_REPETITIONS, value_parser = parse_repetitions)]
    pub repetitions: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_WIDTH, value_parser = clap::value_parser!(u32).range(160..))]
    pub width: u32,
    #[arg(long, global = true, default_value_t = DEFAULT_HEIGHT, value_parser = clap::value_parser!(u32).range(120..))]
    pub height: u32,
}

fn parse_repetitions(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing reports to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cfg, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

/// Runs with the process arguments and standard streams.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

fn choice(cfg: &CliConfig) -> Result<(BackendChoice, usize), Failure> {
    let (env_choice, threshold) = env_config().map_err(|e| Failure::Config(e.to_string()))?;
    Ok((cfg.backend.map_or(env_choice, BackendChoice::from), threshold))
}

fn engine_for(cfg: &CliConfig, err: &mut dyn Write) -> Result<Arc<Engine>, Failure> {
    let (choice, threshold) = choice(cfg)?;
    match choice {
        BackendChoice::Seq => Ok(Engine::sequential()),
        BackendChoice::Parallel => init_default_context()
            .map(|ctx| Engine::with_context(ctx, 0))
            .map_err(|e| Failure::Runtime(format!("parallel backend unavailable: {e}"))),
        BackendChoice::Auto => match init_default_context() {
            Ok(ctx) => Ok(Engine::with_context(ctx, threshold)),
            Err(e) => {
                let _ = writeln!(err, "warning: parallel backend unavailable ({e}); using sequential");
                Ok(Engine::sequential())
            }
        },
    }
}

fn prepare_output_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Config(format!("output directory {} is not writable: {e}", dir.display())))
}

fn execute(cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match cfg.command {
        Command::Bench => cmd_bench(cfg, out, err),
        Command::DemoGmm => write_demo(cfg, "demo-gmm.svg", demo::gmm_figure, out, err),
        Command::DemoKnn => write_demo(cfg, "demo-knn.svg", demo::knn_figure, out, err),
        Command::DemoSgd => write_demo(cfg, "demo-sgd.svg", demo::sgd_figure, out, err),
        Command::Matinfo => cmd_matinfo(cfg, out, err),
    }
}

fn cmd_bench(cfg: &CliConfig, out: &mut dyn Write, _err: &mut dyn Write) -> Result<(), Failure> {
    let (choice, _) = choice(cfg)?;
    prepare_output_dir(&cfg.output_dir)?;
    let backends = match choice {
        BackendChoice::Seq => vec![BenchBackend::sequential()],
        BackendChoice::Parallel => vec![BenchBackend::parallel()],
        BackendChoice::Auto => vec![BenchBackend::sequential(), BenchBackend::parallel()],
    };
    let opts = RunOptions { repetitions: cfg.repetitions, seed: cfg.seed, final_sync: true };
    let report = bench::run(&bench::define_tasks(), &backends, &opts).map_err(|e| Failure::Runtime(e.to_string()))?;
    let path = cfg.output_dir.join("bench.json");
    std::fs::write(&path, report.to_json() + "\n")
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    let _ = write!(out, "{}", report.to_table());
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

type DemoFn = fn(u64, u32, u32) -> Result<Figure, demo::DemoError>;

fn write_demo(cfg: &CliConfig, name: &str, build: DemoFn, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let engine = engine_for(cfg, err)?;
    prepare_output_dir(&cfg.output_dir)?;
    let fig = backend::with_engine(&engine, || build(cfg.seed, cfg.width, cfg.height))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let path = cfg.output_dir.join(name);
    fig.show(&path).map_err(|e| Failure::Runtime(e.to_string()))?;
    if fig.clamped_samples() > 0 {
        let _ = writeln!(err, "warning: {} non-finite samples clamped", fig.clamped_samples());
    }
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

fn cmd_matinfo(cfg: &CliConfig, out: &mut dyn Write, _err: &mut dyn Write) -> Result<(), Failure> {
    let (choice, threshold) = choice(cfg)?;
    let devices = enumerate_devices();
    let _ = writeln!(out, "devices:");
    for (k, d) in devices.iter().enumerate() {
        let _ = writeln!(out, "  [{k}] {d}");
    }
    match select_device(&devices) {
        Ok(d) => {
            let _ = writeln!(out, "selected: {d}");
        }
        Err(e) => {
            let _ = writeln!(out, "selected: none ({e})");
        }
    }
    let _ = writeln!(out, "backend: {choice} (dispatch threshold {threshold} elements)");
    let _ = writeln!(out, "host: {}", bench::host_description());
    Ok(())
}
