use std::sync::Arc;

use matcha::backend::{
    self, enumerate_devices, init_context, select_device, BackendError, ComputeContext, ContextOptions,
    DeviceDescriptor, DeviceKind, Engine, KernelArg, Route,
};
use matcha::{BinaryOp, Matrix, MatrixError, Residency};
use proptest::prelude::*;

fn ctx() -> Arc<ComputeContext> {
    init_context(&select_device(&enumerate_devices()).unwrap()).unwrap()
}

fn rel_close(a: &[f32], b: &[f32], tol: f32) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

#[test]
fn init_precompiles_builtins() {
    let c = ctx();
    assert!(c.cached_kernels() >= 6);
    for name in ["add", "sub", "mul", "div", "matmul", "broadcast_add"] {
        assert!(c.builtin(name).is_some(), "{name}");
    }
    let other = ctx();
    assert_ne!(c.id(), other.id());
    assert_eq!(other.cached_kernels(), c.cached_kernels());
    assert_eq!(other.stats().compiles as usize, other.cached_kernels());
}

#[test]
fn gpu_init_fails_but_matrices_work() {
    let gpu = DeviceDescriptor {
        platform_name: "absent".into(),
        device_kind: DeviceKind::Gpu,
        device_index: 0,
        max_parallel_units: 1,
    };
    assert!(matches!(init_context(&gpu), Err(BackendError::Unavailable(_))));
    let engine = Engine::sequential();
    backend::with_engine(&engine, || {
        let a = Matrix::random(80, 80, Some(1)).unwrap();
        let b = a.matmul(&a).unwrap().add(&a).unwrap();
        assert_eq!(b.shape(), (80, 80));
    });
}

#[test]
fn upload_download_round_trip() {
    let c = ctx();
    let a = Matrix::random(5, 7, Some(3)).unwrap();
    let before = a.to_vec();
    c.upload(&a).unwrap();
    assert_eq!(a.residency(), Residency::Device { context: c.id(), dirty: false });
    c.upload(&a).unwrap();
    c.download(&a);
    assert_eq!(c.stats().uploads, 1);
    assert_eq!(c.stats().downloads, 0);
    assert_eq!(a.to_vec(), before);
}

#[test]
fn download_of_host_matrix_is_noop() {
    let c = ctx();
    let a = Matrix::zeros(3, 3).unwrap();
    c.download(&a);
    let s = c.stats();
    assert_eq!((s.downloads, s.syncs), (0, 0));
}

#[test]
fn queue_is_lazy_until_read() {
    let c = ctx();
    let add = c.builtin("add").unwrap();
    let a = Matrix::random(16, 16, Some(1)).unwrap();
    let b = Matrix::random(16, 16, Some(2)).unwrap();
    let mut x = c.execute(&add, &[(&a).into(), (&b).into()], 256).unwrap();
    for _ in 0..2 {
        x = c.execute(&add, &[(&x).into(), (&b).into()], 256).unwrap();
    }
    assert_eq!(c.stats().syncs, 0);
    assert_eq!(c.stats().enqueued, 3);
    assert!(x.is_device_dirty());
    let v = x.get(3, 4).unwrap();
    let expect = a.get(3, 4).unwrap() + b.get(3, 4).unwrap() + b.get(3, 4).unwrap() + b.get(3, 4).unwrap();
    assert_eq!(v, expect);
    let s = c.stats();
    assert_eq!((s.syncs, s.downloads, s.uploads), (1, 1, 2));
    // Host copy is current now: further reads do not sync.
    let _ = x.get(0, 0).unwrap();
    let _ = x.to_vec();
    assert_eq!(c.stats().syncs, 1);
}

#[test]
fn chained_pipeline_transfers() {
    let c = ctx();
    let engine = Engine::with_context(Arc::clone(&c), 0);
    let a = Matrix::random(32, 32, Some(10)).unwrap();
    let b = Matrix::random(32, 32, Some(11)).unwrap();
    let out = backend::with_engine(&engine, || {
        let x = a.matmul(&b).unwrap();
        let x = x.add(&a).unwrap();
        let x = x.mul(&b).unwrap();
        let x = x.sub(&a).unwrap();
        x.matmul(&b).unwrap()
    });
    let host_reads = 1;
    let data = out.to_vec();
    let s = c.stats();
    assert_eq!(s.downloads, 1);
    assert!(s.uploads <= 2);
    assert_eq!(s.syncs, host_reads);
    let seq = Engine::sequential();
    let expect = backend::with_engine(&seq, || {
        let x = a.matmul(&b).unwrap().add(&a).unwrap().mul(&b).unwrap().sub(&a).unwrap();
        x.matmul(&b).unwrap().to_vec()
    });
    assert!(rel_close(&data, &expect, 1e-5));
}

#[test]
fn execute_argument_checks() {
    let c = ctx();
    let add = c.builtin("add").unwrap();
    let a = Matrix::zeros(2, 2).unwrap();
    let err = c.execute(&add, &[(&a).into()], 4).unwrap_err();
    assert!(matches!(err, BackendError::Argument(_)));
    let map3 = c.compile_map("a[i] + b[i] + c[i]", 3).unwrap();
    assert!(matches!(
        c.execute(&map3, &[(&a).into(), (&a).into()], 4),
        Err(BackendError::Argument(_))
    ));
    assert!(matches!(
        c.execute(&add, &[(&a).into(), (&a).into()], 3),
        Err(BackendError::Argument(_))
    ));
    let b = Matrix::zeros(3, 2).unwrap();
    assert!(matches!(
        c.execute(&add, &[(&a).into(), (&b).into()], 100),
        Err(BackendError::Argument(_))
    ));
    let other = ctx();
    assert!(matches!(
        other.execute(&add, &[(&a).into(), (&a).into()], 4),
        Err(BackendError::Argument(_))
    ));
    assert_eq!(c.stats().enqueued, 0);
    let scale = c.builtin("scale").unwrap();
    let r = c.execute(&scale, &[(&a).into(), KernelArg::Scalar(2.0)], 4).unwrap();
    assert_eq!(r.to_vec(), vec![0.0; 4]);
}

#[test]
fn allocation_failure_keeps_host_copy() {
    let c = ComputeContext::new(
        select_device(&enumerate_devices()).unwrap(),
        ContextOptions { memory_limit: Some(1024), threads: None },
    )
    .unwrap();
    let a = Matrix::random(20, 20, Some(1)).unwrap();
    let err = c.upload(&a).unwrap_err();
    assert!(matches!(err, BackendError::Allocation { .. }));
    assert_eq!(a.residency(), Residency::Host);
    assert_eq!(a.to_vec(), Matrix::random(20, 20, Some(1)).unwrap().to_vec());
    // Engine falls back to the sequential path.
    let engine = Engine::with_context(Arc::clone(&c), 0);
    let s = engine.matmul(&a, &a).unwrap();
    assert_eq!(s.residency(), Residency::Host);
    assert_eq!(engine.route_counts(), (1, 0));
    drop(s);
    assert_eq!(c.allocated_bytes(), 0);
}

#[test]
fn buffers_are_freed_with_matrices() {
    let c = ctx();
    let a = Matrix::random(10, 10, Some(1)).unwrap();
    c.upload(&a).unwrap();
    let out = c.execute(&c.builtin("add").unwrap(), &[(&a).into(), (&a).into()], 100).unwrap();
    assert_eq!(c.allocated_bytes(), 800);
    drop(out);
    drop(a);
    // The queue may still hold the instruction; a sync drains it.
    let probe = Matrix::zeros(1, 1).unwrap();
    let p = c.execute(&c.builtin("add").unwrap(), &[(&probe).into(), (&probe).into()], 1).unwrap();
    let _ = p.get(0, 0).unwrap();
    drop(p);
    drop(probe);
    assert_eq!(c.allocated_bytes(), 0);
}

#[test]
fn map_generator_sigmoid() {
    let c = ctx();
    let sigmoid = c.map_generator("1.0 / ( exp(-a[i]) + 1.0 )", 1).unwrap();
    let out = sigmoid.call(&Matrix::zeros(1, 1).unwrap()).unwrap();
    assert_eq!(out.get(0, 0).unwrap(), 0.5);
    let input = Matrix::random(1000, 1, Some(4)).unwrap();
    let got = sigmoid.call(&input).unwrap().to_vec();
    for (g, x) in got.iter().zip(input.to_vec()) {
        let want = 1.0 / ((-(x as f64)).exp() + 1.0);
        assert!((*g as f64 - want).abs() <= 1e-6);
    }
}

#[test]
fn map_generator_matches_add_and_rejects_bad_source() {
    let c = ctx();
    let plus = c.map_generator("a[i] + b[i]", 2).unwrap();
    let a = Matrix::random(8, 8, Some(1)).unwrap();
    let b = Matrix::random(8, 8, Some(2)).unwrap();
    let seq = Engine::sequential();
    let want = backend::with_engine(&seq, || a.add(&b).unwrap());
    assert!(plus.apply(&[&a, &b]).unwrap().values_eq(&want));
    assert!(plus.apply(&[&a, &b.t()]).unwrap().values_eq(&backend::with_engine(&seq, || a.add(&b.t()).unwrap())));
    assert!(matches!(c.map_generator("a[i] ++ 1", 1), Err(BackendError::Compile { .. })));
    assert!(matches!(plus.apply(&[&a]), Err(MatrixError::Backend(BackendError::Argument(_)))));
    assert!(matches!(
        plus.apply(&[&a, &Matrix::zeros(2, 2).unwrap()]),
        Err(MatrixError::Shape { .. })
    ));
}

#[test]
fn kernel_cache_compiles_once() {
    let c = ctx();
    let before = c.stats().compiles;
    let k1 = c.compile_map("tanh(a[i]) * 2", 1).unwrap();
    let k2 = c.compile_map("tanh(a[i]) * 2", 1).unwrap();
    let _ = c.map_generator("tanh(a[i]) * 2", 1).unwrap();
    assert!(Arc::ptr_eq(&k1, &k2));
    assert_eq!(c.stats().compiles - before, 1);
    // Same text at a different arity is a different kernel.
    let _ = c.compile_map("tanh(a[i]) * 2", 2).unwrap();
    assert_eq!(c.stats().compiles - before, 2);
}

#[test]
fn sequential_engine_map() {
    let e = Engine::sequential();
    let relu = e.map_generator("fmax(a[i], 0)", 1).unwrap();
    let m = Matrix::from_array(&[[-1.0, 2.0], [3.0, -4.0]]).unwrap();
    assert_eq!(relu.call(&m).unwrap().to_vec(), vec![0.0, 2.0, 3.0, 0.0]);
    let idx = e.map_generator("i + 0 * a[i]", 1).unwrap();
    assert_eq!(idx.call(&m.t()).unwrap().to_vec(), vec![0.0, 1.0, 2.0, 3.0]);
}

#[test]
fn threshold_routing() {
    let c = ctx();
    let engine = Engine::with_context(Arc::clone(&c), 4096);
    let big_a = Matrix::random(1000, 100, Some(1)).unwrap();
    let big_b = Matrix::random(100, 1000, Some(2)).unwrap();
    assert_eq!(engine.route(1_000_000, &[&big_a, &big_b]), Route::Parallel);
    let small = Matrix::random(2, 2, Some(3)).unwrap();
    assert_eq!(engine.route(4, &[&small, &small]), Route::Sequential);
    let r = engine.matmul(&small, &small).unwrap();
    assert_eq!(r.residency(), Residency::Host);
    assert_eq!(engine.route_counts(), (1, 0));
    // A small op on device-dirty data stays on the device.
    let dev = c.execute(&c.builtin("add").unwrap(), &[(&small).into(), (&small).into()], 4).unwrap();
    assert_eq!(engine.route(4, &[&dev, &small]), Route::Parallel);
    let _ = engine.elementwise(BinaryOp::Add, &dev, &small).unwrap();
    assert_eq!(engine.route_counts(), (1, 1));
}

#[test]
fn install_overrides_routes_global_ops() {
    let c = ctx();
    backend::install_overrides(Arc::clone(&c));
    let engine = backend::current();
    assert!(engine.has_parallel());
    let a = Matrix::random(1000, 100, Some(1)).unwrap();
    let b = Matrix::random(100, 1000, Some(2)).unwrap();
    let before = c.stats().enqueued;
    let p = a.matmul(&b).unwrap();
    assert!(c.stats().enqueued > before);
    assert_eq!(p.shape(), (1000, 1000));
    let q = Matrix::identity(2).unwrap().matmul(&Matrix::identity(2).unwrap()).unwrap();
    assert_eq!(q.residency(), Residency::Host);
    backend::reset_overrides();
    assert!(!backend::current().has_parallel());
    let r = Matrix::identity(3).unwrap().matmul(&Matrix::identity(3).unwrap()).unwrap();
    assert!(r.values_eq(&Matrix::identity(3).unwrap()));
}

#[test]
fn get_and_set_on_device_results_sync() {
    let c = ctx();
    let a = Matrix::random(4, 4, Some(1)).unwrap();
    let mut x = c.execute(&c.builtin("mul").unwrap(), &[(&a).into(), (&a).into()], 16).unwrap();
    x.set(0, 0, 7.0).unwrap();
    assert_eq!(c.stats().syncs, 1);
    assert_eq!(x.residency(), Residency::Host);
    assert_eq!(x.get(0, 0).unwrap(), 7.0);
    assert_eq!(x.get(1, 1).unwrap(), a.get(1, 1).unwrap() * a.get(1, 1).unwrap());
}

#[test]
fn transposed_device_operands() {
    let c = ctx();
    let engine = Engine::with_context(Arc::clone(&c), 0);
    let a = Matrix::random(200, 500, Some(5)).unwrap();
    let s = Matrix::random(200, 50, Some(6)).unwrap();
    let par = backend::with_engine(&engine, || a.t().matmul(&s).unwrap());
    let seq = backend::with_engine(&Engine::sequential(), || a.t().matmul(&s).unwrap());
    assert_eq!(par.shape(), (500, 50));
    assert_eq!(par.to_vec(), seq.to_vec());
    // The transpose reused the buffer uploaded for `a`.
    assert_eq!(c.stats().uploads, 2);
}

#[test]
fn parallel_elementwise_is_run_to_run_deterministic() {
    let engine = Engine::with_context(ctx(), 0);
    let a = Matrix::random(64, 64, Some(1)).unwrap();
    let b = Matrix::random(64, 1, Some(2)).unwrap();
    let r1 = backend::with_engine(&engine, || a.div(&b).unwrap().to_vec());
    let r2 = backend::with_engine(&engine, || a.div(&b).unwrap().to_vec());
    assert_eq!(
        r1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        r2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

fn shared_ctx() -> Arc<ComputeContext> {
    use std::sync::OnceLock;
    static CTX: OnceLock<Arc<ComputeContext>> = OnceLock::new();
    Arc::clone(CTX.get_or_init(ctx))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn backends_agree(rows in 1usize..40, inner in 1usize..40, cols in 1usize..40, seed: u64, op_idx in 0usize..4, transposed: bool) {
        let par = Engine::with_context(shared_ctx(), 0);
        let seq = Engine::sequential();
        let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div][op_idx];
        let a = Matrix::random(rows, inner, Some(seed)).unwrap();
        let b = if transposed {
            Matrix::random(cols, inner, Some(seed ^ 5)).unwrap().t()
        } else {
            Matrix::random(inner, cols, Some(seed ^ 5)).unwrap()
        };
        let c = Matrix::random(rows, inner, Some(seed ^ 9)).unwrap();
        let v = Matrix::random(rows, 1, Some(seed ^ 3)).unwrap();

        let mp = par.matmul(&a, &b).unwrap().to_vec();
        let ms = seq.matmul(&a, &b).unwrap().to_vec();
        prop_assert!(rel_close(&mp, &ms, 1e-5));
        prop_assert_eq!(par.elementwise(op, &a, &c).unwrap().to_vec(), seq.elementwise(op, &a, &c).unwrap().to_vec());
        prop_assert_eq!(par.elementwise(op, &a, &v).unwrap().to_vec(), seq.elementwise(op, &a, &v).unwrap().to_vec());
        let pm = par.map_generator("fmax(a[i], b[i]) * exp(-a[i])", 2).unwrap();
        let sm = seq.map_generator("fmax(a[i], b[i]) * exp(-a[i])", 2).unwrap();
        prop_assert_eq!(pm.apply(&[&a, &c]).unwrap().to_vec(), sm.apply(&[&a, &c]).unwrap().to_vec());
    }
}
