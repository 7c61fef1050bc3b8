use matcha::bench::{define_tasks, run, BenchBackend, BenchError, RunOptions, TaskId, TimingReport};

fn opts(repetitions: usize) -> RunOptions {
    RunOptions { repetitions, seed: 1, final_sync: true }
}

#[test]
fn five_samples_per_cell_and_consistent_means() {
    let tasks = &define_tasks()[1..2];
    let report = run(tasks, &[BenchBackend::sequential(), BenchBackend::parallel()], &opts(5)).unwrap();
    assert_eq!(report.tasks.len(), 2);
    for t in &report.tasks {
        assert_eq!(t.times_ms.len(), 5);
        let mean = t.mean_ms.unwrap();
        let (lo, hi) = t.times_ms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(lo <= mean && mean <= hi);
        assert!((mean - t.times_ms.iter().sum::<f64>() / 5.0).abs() < 1e-12);
    }
}

#[test]
fn backends_agree_on_every_task() {
    let report = run(&define_tasks(), &[BenchBackend::sequential(), BenchBackend::parallel()], &opts(1)).unwrap();
    assert_eq!(report.tasks.len(), 8);
    assert!(report.checksum_mismatches().is_empty());
    let seq = report.timing(TaskId::Task3, "seq").unwrap().checksum.unwrap();
    let par = report.timing(TaskId::Task3, "parallel").unwrap().checksum.unwrap();
    assert!((seq - par).abs() <= 1e-3 * seq.abs());
    assert!(report.task3_direction_ok().is_some());
}

#[test]
fn unavailable_backend_is_reported_not_fatal() {
    let missing = BenchBackend { name: "parallel".into(), engine: Err("no device".into()) };
    let tasks = &define_tasks()[1..2];
    let report = run(tasks, &[BenchBackend::sequential(), missing], &opts(2)).unwrap();
    let par = report.timing(TaskId::Task2, "parallel").unwrap();
    assert_eq!(par.mean_ms, None);
    assert_eq!(par.unavailable.as_deref(), Some("no device"));
    assert!(report.timing(TaskId::Task2, "seq").unwrap().mean_ms.is_some());
    assert!(report.to_table().contains("unavailable"));
    assert_eq!(report.task3_direction_ok(), None);
}

#[test]
fn timing_without_final_sync_is_a_protocol_error() {
    let tasks = &define_tasks()[1..2];
    let sloppy = RunOptions { final_sync: false, ..opts(1) };
    let err = run(tasks, &[BenchBackend::parallel()], &sloppy).unwrap_err();
    assert!(matches!(err, BenchError::Protocol { task: TaskId::Task2, .. }), "{err}");
    // Host results need no download, so the sequential path stays valid.
    run(tasks, &[BenchBackend::sequential()], &sloppy).unwrap();
}

#[test]
fn zero_repetitions_rejected() {
    let err = run(&define_tasks(), &[BenchBackend::sequential()], &opts(0)).unwrap_err();
    assert!(matches!(err, BenchError::Config(_)));
}

#[test]
fn json_report_layout() {
    let tasks = &define_tasks()[1..2];
    let report = run(tasks, &[BenchBackend::sequential()], &opts(2)).unwrap();
    let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(value["host"].is_string());
    let entry = &value["tasks"][0];
    assert_eq!(entry["id"], "task2");
    assert_eq!(entry["backend"], "seq");
    assert_eq!(entry["times_ms"].as_array().unwrap().len(), 2);
    assert!(entry["mean_ms"].is_f64() && entry["checksum"].is_f64());
    let back: TimingReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
    let table = report.to_table();
    assert!(table.starts_with("host: "));
    assert!(table.contains("task2") && table.contains("seq mean (ms)"));
}
