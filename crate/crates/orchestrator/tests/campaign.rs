mod common;

use pground::config::RunMode;
use pground::instance::{TRACE_FILE, VERDICT_FILE};
use pground::runner::{collect_report, run_campaign, write_report, Executor, RunOptions};
use pground::trace::replay;
use pground_core::kpi::{write_kpi_csv, TestVerdict};

fn opts(workers: usize, mode: RunMode, executor: Executor) -> RunOptions {
    RunOptions { mode, workers, batch: None, executor }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (k, workers) in [1, 2, 4].into_iter().enumerate() {
        let cfg = common::small(&tmp.path().join(format!("w{k}")));
        let outcome = run_campaign(&cfg, &opts(workers, RunMode::RecordReplay, common::process())).unwrap();
        assert!(outcome.success(), "{:?}", outcome.failures);
        assert_eq!(outcome.report.cumulative.total, 8);
        assert_eq!(outcome.report.batches.len(), 2);
        assert_eq!(outcome.report.batches[0].workers, workers.min(4));
        runs.push(common::outputs(&outcome.campaign_dir));
    }
    assert_eq!(runs[0].len(), 8 * 3 + 1);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn thread_and_process_executors_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_campaign(&common::small(&tmp.path().join("p")), &opts(2, RunMode::Headless, common::process())).unwrap();
    let b = run_campaign(&common::small(&tmp.path().join("t")), &opts(2, RunMode::Headless, Executor::Thread)).unwrap();
    assert_eq!(common::outputs(&a.campaign_dir), common::outputs(&b.campaign_dir));
}

#[test]
fn headless_writes_no_trace_and_record_adds_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = common::small(tmp.path());
    cfg.matrix.sut_variants.truncate(1);
    cfg.matrix.times.truncate(1);
    cfg.matrix.weathers.truncate(1);
    let headless = run_campaign(&cfg, &opts(1, RunMode::Headless, Executor::Thread)).unwrap();
    let case = headless.campaign_dir.join("batch1/case0000");
    let mut files: Vec<String> =
        std::fs::read_dir(&case).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, ["kpi.csv", "verdict.txt"]);
    let headless_out = common::outputs(&headless.campaign_dir);

    let record = run_campaign(&cfg, &opts(1, RunMode::RecordReplay, Executor::Thread)).unwrap();
    assert!(case.join(TRACE_FILE).is_file());
    let mut record_out = common::outputs(&record.campaign_dir);
    record_out.remove("batch1/case0000/trace.ndjson");
    assert_eq!(headless_out, record_out);
}

#[test]
fn every_trace_replays_to_its_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_campaign(&common::small(tmp.path()), &opts(2, RunMode::RecordReplay, common::process())).unwrap();
    let mut n = 0;
    for batch in ["batch1", "batch2"] {
        for entry in std::fs::read_dir(out.campaign_dir.join(batch)).unwrap().flatten() {
            if !entry.path().is_dir() {
                continue;
            }
            let r = replay(&entry.path().join(TRACE_FILE)).unwrap();
            let kpi = std::fs::read_to_string(entry.path().join("kpi.csv")).unwrap();
            let verdict = std::fs::read_to_string(entry.path().join(VERDICT_FILE)).unwrap();
            assert_eq!(write_kpi_csv(&r.records), kpi);
            assert_eq!(r.verdict.to_text(), verdict);
            n += 1;
        }
    }
    assert_eq!(n, 8);
}

#[test]
fn reference_cases_pass_and_fail_as_expected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_campaign(&common::small(tmp.path()), &opts(2, RunMode::Headless, Executor::Thread)).unwrap();
    let read = |batch: usize, id: usize| {
        let p = out.campaign_dir.join(format!("batch{batch}/case{id:04}/{VERDICT_FILE}"));
        TestVerdict::from_text(&std::fs::read_to_string(p).unwrap()).unwrap()
    };
    // det-A, 1pm, clear.
    let a = read(1, 0);
    assert!(a.passed && !a.fos_violated && a.min_dtc >= 1.0);
    let kpi = pground_core::kpi::parse_kpi_csv(
        &std::fs::read_to_string(out.campaign_dir.join("batch1/case0000/kpi.csv")).unwrap(),
    )
    .unwrap();
    assert!(kpi.last().unwrap().speed < 1e-3);
    // 5am, heavy fog: the short-range detector stops closer than det-A.
    let a_fog = read(1, 3);
    let b_fog = read(2, 7);
    assert_eq!((a_fog.sut.as_str(), b_fog.sut.as_str()), ("det-A", "det-B"));
    assert!(a_fog.passed);
    assert!(b_fog.min_dtc < a_fog.min_dtc, "{} vs {}", b_fog.min_dtc, a_fog.min_dtc);
}

#[test]
fn zero_cases_give_an_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = common::small(tmp.path());
    cfg.matrix.sut_variants.clear();
    let out = run_campaign(&cfg, &opts(4, RunMode::Headless, common::process())).unwrap();
    assert!(out.success());
    assert_eq!(out.report.cumulative.total, 0);
    assert!(out.report.rows.is_empty());
    let csv = std::fs::read_to_string(out.campaign_dir.join("report.csv")).unwrap();
    assert_eq!(csv, "sut,passed,total,fos_violations\ncumulative,0,0,0\n");
}

#[test]
fn failing_worker_is_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = common::small(tmp.path());
    // An external SUT that exits at once: its cases fail to execute.
    cfg.external.push(pground::config::ExternalSutConfig {
        name: "broken".into(),
        command: vec!["sh".into(), "-c".into(), "exit 3".into()],
    });
    cfg.matrix.sut_variants = vec!["det-A".into(), "broken".into()];
    let out = run_campaign(&cfg, &opts(4, RunMode::Headless, common::process())).unwrap();
    assert!(!out.success());
    assert_eq!(out.failures.iter().map(|f| f.0).collect::<Vec<_>>(), [4, 5, 6, 7]);
    assert!(out.failures[0].1.contains("external SUT"), "{}", out.failures[0].1);
    assert_eq!(out.report.failed_cases, [4, 5, 6, 7]);
    assert_eq!(out.report.cumulative.total, 4);
    // The healthy cases are complete and identical to a run without the broken ones.
    let mut clean = common::small(&tmp.path().join("clean"));
    clean.matrix.sut_variants.truncate(1);
    let reference = run_campaign(&clean, &opts(1, RunMode::Headless, Executor::Thread)).unwrap();
    let a = common::outputs(&out.campaign_dir);
    let b = common::outputs(&reference.campaign_dir);
    for (k, v) in b.iter().filter(|(k, _)| !k.starts_with("report")) {
        assert_eq!(a.get(k), Some(v), "{k}");
    }
}

#[test]
fn external_sut_drives_the_vehicle() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = common::small(tmp.path());
    // Never brakes, so it runs into the stalled vehicle.
    let script = r#"read init; while read tick; do echo '{"trigger":false,"control":{"throttle":0.3}}'; done"#;
    cfg.external.push(pground::config::ExternalSutConfig {
        name: "blind".into(),
        command: vec!["sh".into(), "-c".into(), script.into()],
    });
    cfg.matrix.sut_variants = vec!["blind".into()];
    cfg.matrix.times.truncate(1);
    cfg.matrix.weathers.truncate(1);
    let out = run_campaign(&cfg, &opts(1, RunMode::Headless, Executor::Thread)).unwrap();
    assert!(out.success(), "{:?}", out.failures);
    assert_eq!((out.report.cumulative.passed, out.report.cumulative.total), (0, 1));
}

#[test]
fn single_batches_then_report_match_a_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let full = run_campaign(&common::small(&tmp.path().join("full")), &opts(2, RunMode::Headless, Executor::Thread)).unwrap();
    let cfg = common::small(&tmp.path().join("split"));
    for k in [2, 1] {
        let o = RunOptions { batch: Some(k), ..opts(2, RunMode::Headless, Executor::Thread) };
        run_campaign(&cfg, &o).unwrap();
    }
    let dir = cfg.campaign_dir();
    assert!(!dir.join("report.csv").exists());
    let report = write_report(&dir).unwrap();
    assert_eq!(report.to_csv(), full.report.to_csv());
    assert_eq!(common::outputs(&dir), common::outputs(&full.campaign_dir));
    assert_eq!(collect_report(&dir).unwrap().batches.len(), 2);

    let bad = RunOptions { batch: Some(3), ..opts(1, RunMode::Headless, Executor::Thread) };
    assert_eq!(run_campaign(&cfg, &bad).unwrap_err().exit_code(), 2);
}

#[test]
fn cross_batch_mode_gives_the_same_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = run_campaign(&common::small(&tmp.path().join("a")), &opts(3, RunMode::Headless, Executor::Thread)).unwrap();
    let mut cfg = common::small(&tmp.path().join("b"));
    cfg.campaign.cross_batch = true;
    let cross = run_campaign(&cfg, &opts(3, RunMode::Headless, Executor::Thread)).unwrap();
    assert_eq!(common::outputs(&seq.campaign_dir), common::outputs(&cross.campaign_dir));
    assert!(cross.campaign_dir.join("resources_all.csv").is_file());
    assert!(seq.campaign_dir.join("resources_batch2.csv").is_file());
}

#[test]
fn rerun_replaces_stale_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small(tmp.path());
    run_campaign(&cfg, &opts(2, RunMode::Headless, Executor::Thread)).unwrap();
    let mut fewer = cfg.clone();
    fewer.matrix.sut_variants.truncate(1);
    let out = run_campaign(&fewer, &opts(2, RunMode::Headless, Executor::Thread)).unwrap();
    assert_eq!(out.report.cumulative.total, 4);
    assert!(!out.campaign_dir.join("batch2").exists());
}
