//! Campaign execution: batches run one after another, the cases of a batch
//! run concurrently on a pool of workers.
//!
//! Each case is executed in its own OS process (or, for in-process use, its
//! own thread). Workers report back over a single event queue that the
//! coordinator drains; they share nothing else and write only under their
//! own case directory.

use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc::{channel, Sender};
use std::sync::Arc;
use std::time::Instant;

use pground_core::kpi::{aggregate_results, peak_sample, speedup_report, BatchSummary, CampaignReport, TestVerdict};
use pground_core::scenario::TestCase;
use serde::{Deserialize, Serialize};

use crate::config::{write_resolved, CampaignConfig, RunMode};
use crate::error::{Error, Result};
use crate::instance::{case_dir, run_instance, VERDICT_FILE};
use crate::resources::{new_worker_set, write_resources, LivePids, ResourceSampler};
use crate::stream::StreamServer;

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const BATCH_SUMMARY: &str = "batch.json";
pub const WORKER_LOG: &str = "worker.log";

/// How a case is isolated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Executor {
    /// One child process per case running `<program> worker ...`.
    Process { program: PathBuf },
    /// One thread per case inside the coordinator.
    Thread,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: RunMode,
    pub workers: usize,
    /// 1-based batch to run; `None` runs them all.
    pub batch: Option<usize>,
    pub executor: Executor,
}

impl RunOptions {
    pub fn from_config(cfg: &CampaignConfig, executor: Executor) -> Self {
        RunOptions { mode: cfg.campaign.mode, workers: cfg.campaign.workers, batch: None, executor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Queued,
    Running { worker: usize },
    Done,
    Failed,
}

impl CaseStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, CaseStatus::Done | CaseStatus::Failed)
    }
}

/// Per-case bookkeeping for the cases of one scheduling round.
#[derive(Debug, Clone, Default)]
pub struct JobArray {
    status: BTreeMap<usize, CaseStatus>,
}

impl JobArray {
    pub fn new(cases: impl IntoIterator<Item = usize>) -> Self {
        JobArray { status: cases.into_iter().map(|c| (c, CaseStatus::Queued)).collect() }
    }

    pub fn status(&self, case: usize) -> Option<CaseStatus> {
        self.status.get(&case).copied()
    }

    pub fn start(&mut self, case: usize, worker: usize) -> Result<()> {
        match self.status.get_mut(&case) {
            Some(s @ CaseStatus::Queued) => {
                *s = CaseStatus::Running { worker };
                Ok(())
            }
            other => Err(Error::Execution(format!("case {case} cannot start from state {other:?}"))),
        }
    }

    /// Moves a running case to its terminal state. Returns the worker it
    /// occupied.
    pub fn finish(&mut self, case: usize, ok: bool) -> Result<usize> {
        match self.status.get_mut(&case) {
            Some(s) => match *s {
                CaseStatus::Running { worker } => {
                    *s = if ok { CaseStatus::Done } else { CaseStatus::Failed };
                    Ok(worker)
                }
                other => Err(Error::Execution(format!("case {case} cannot finish from state {other:?}"))),
            },
            None => Err(Error::Execution(format!("case {case} is not part of this job array"))),
        }
    }

    pub fn running(&self) -> usize {
        self.status.values().filter(|s| matches!(s, CaseStatus::Running { .. })).count()
    }

    pub fn all_terminal(&self) -> bool {
        self.status.values().all(|s| s.is_terminal())
    }
}

/// What a worker reports to the coordinator.
#[derive(Debug)]
enum Event {
    Trace { case: usize, line: String },
    Done { case: usize, verdict: TestVerdict },
    Failed { case: usize, reason: String },
    /// The worker is gone. Sent last for every case.
    Exited { case: usize, status: String },
}

/// Line protocol on a worker's stdout.
pub mod wire {
    pub const TRACE: &str = "T ";
    pub const DONE: &str = "D ";
    pub const FAILED: &str = "F ";
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub campaign_dir: PathBuf,
    /// `(case, diagnostic)` for every case that failed to execute.
    pub failures: Vec<(usize, String)>,
}

impl CampaignOutcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredBatch {
    summary: BatchSummary,
    failed: Vec<(usize, String)>,
}

struct Coordinator<'a> {
    cfg: &'a CampaignConfig,
    resolved: PathBuf,
    opts: &'a RunOptions,
    stream: Option<&'a StreamServer>,
    pids: LivePids,
}

struct RoundResult {
    verdicts: BTreeMap<usize, TestVerdict>,
    serial_times: BTreeMap<usize, f64>,
    failures: Vec<(usize, String)>,
    wall_time: f64,
    workers: usize,
}

impl Coordinator<'_> {
    fn publish_status(&self, case: usize, state: &str, extra: &str) {
        if let Some(s) = self.stream {
            s.publish(&format!(r#"{{"type":"status","case":{case},"state":"{state}"{extra}}}"#));
        }
    }

    fn launch(&self, case: &TestCase, batch: usize, tx: Sender<Event>) -> Result<()> {
        let dir = case_dir(&self.cfg.campaign_dir(), batch, case.id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let id = case.id;
        match &self.opts.executor {
            Executor::Process { program } => {
                let log_path = dir.join(WORKER_LOG);
                let log_file = std::fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
                let mut child = Command::new(program)
                    .arg("worker")
                    .arg("--config")
                    .arg(&self.resolved)
                    .arg("--case")
                    .arg(id.to_string())
                    .arg("--mode")
                    .arg(self.opts.mode.as_str())
                    .arg("--dir")
                    .arg(&dir)
                    .stdin(Stdio::null())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::from(log_file))
                    .spawn()
                    .map_err(|e| Error::Execution(format!("cannot start worker {}: {e}", program.display())))?;
                let pid = child.id();
                self.pids.lock().unwrap_or_else(|e| e.into_inner()).add(pid);
                let stdout = child.stdout.take().expect("stdout is piped");
                let pids = Arc::clone(&self.pids);
                std::thread::spawn(move || {
                    for line in BufReader::new(stdout).lines() {
                        let Ok(line) = line else { break };
                        let event = if let Some(rest) = line.strip_prefix(wire::TRACE) {
                            Event::Trace { case: id, line: rest.to_string() }
                        } else if let Some(rest) = line.strip_prefix(wire::DONE) {
                            match serde_json::from_str(rest) {
                                Ok(verdict) => Event::Done { case: id, verdict },
                                Err(e) => Event::Failed { case: id, reason: format!("bad verdict from worker: {e}") },
                            }
                        } else if let Some(rest) = line.strip_prefix(wire::FAILED) {
                            Event::Failed { case: id, reason: rest.to_string() }
                        } else {
                            continue;
                        };
                        let _ = tx.send(event);
                    }
                    // Wait for exit without reaping so the final CPU time is
                    // still readable.
                    wait_exited(pid);
                    pids.lock().unwrap_or_else(|e| e.into_inner()).retire(pid);
                    let status = match child.wait() {
                        Ok(s) => s.to_string(),
                        Err(e) => format!("wait failed: {e}"),
                    };
                    if std::fs::metadata(&log_path).is_ok_and(|m| m.len() == 0) {
                        let _ = std::fs::remove_file(&log_path);
                    }
                    let _ = tx.send(Event::Exited { case: id, status });
                });
            }
            Executor::Thread => {
                let cfg = self.cfg.clone();
                let case = case.clone();
                let mode = self.opts.mode;
                let streaming = self.stream.is_some();
                std::thread::spawn(move || {
                    let trace_tx = tx.clone();
                    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                        let mut on_trace = |line: &str| {
                            if streaming {
                                let _ = trace_tx.send(Event::Trace { case: id, line: line.to_string() });
                            }
                        };
                        run_instance(&case, &cfg, mode, &dir, &mut on_trace)
                    }));
                    let event = match outcome {
                        Ok(Ok(r)) => Event::Done { case: id, verdict: r.verdict },
                        Ok(Err(e)) => Event::Failed { case: id, reason: e.to_string() },
                        Err(_) => Event::Failed { case: id, reason: "worker panicked".into() },
                    };
                    let _ = tx.send(event);
                    let _ = tx.send(Event::Exited { case: id, status: "thread finished".into() });
                });
            }
        }
        Ok(())
    }

    /// Runs `cases` (with their batch numbers) on at most `workers` workers.
    fn run_round(&self, cases: &[(usize, &TestCase)]) -> Result<RoundResult> {
        let workers = self.opts.workers.min(cases.len()).max(1);
        let started = Instant::now();
        let mut jobs = JobArray::new(cases.iter().map(|(_, c)| c.id));
        let mut queue: VecDeque<&(usize, &TestCase)> = cases.iter().collect();
        let mut free: Vec<usize> = (0..workers).rev().collect();
        let mut start_times: BTreeMap<usize, Instant> = BTreeMap::new();
        let mut result = RoundResult {
            verdicts: BTreeMap::new(),
            serial_times: BTreeMap::new(),
            failures: Vec::new(),
            wall_time: 0.0,
            workers,
        };
        let mut pending_failure: BTreeMap<usize, String> = BTreeMap::new();
        let (tx, rx) = channel::<Event>();

        while !jobs.all_terminal() {
            while let (Some(worker), Some(&&(batch, case))) = (free.last().copied(), queue.front()) {
                queue.pop_front();
                free.pop();
                jobs.start(case.id, worker)?;
                start_times.insert(case.id, Instant::now());
                self.publish_status(case.id, "running", &format!(r#","worker":{worker},"batch":{batch}"#));
                if let Err(e) = self.launch(case, batch, tx.clone()) {
                    log::error!("case {}: {e}", case.id);
                    result.failures.push((case.id, e.to_string()));
                    free.push(jobs.finish(case.id, false)?);
                    self.publish_status(case.id, "failed", "");
                }
            }
            if jobs.running() == 0 {
                continue;
            }
            let event = rx.recv().map_err(|_| Error::Execution("worker event queue closed".into()))?;
            match event {
                Event::Trace { case, line } => {
                    if let Some(s) = self.stream {
                        s.publish(&format!(r#"{{"case":{case},"record":{line}}}"#));
                    }
                }
                Event::Done { case, verdict } => {
                    result.verdicts.insert(case, verdict);
                }
                Event::Failed { case, reason } => {
                    pending_failure.insert(case, reason);
                }
                Event::Exited { case, status } => {
                    let elapsed = start_times.get(&case).map_or(0.0, |t| t.elapsed().as_secs_f64());
                    let ok = result.verdicts.contains_key(&case);
                    if ok {
                        result.serial_times.insert(case, elapsed);
                        let passed = result.verdicts[&case].passed;
                        self.publish_status(case, "done", &format!(r#","passed":{passed}"#));
                    } else {
                        let reason = pending_failure
                            .remove(&case)
                            .unwrap_or_else(|| format!("worker exited without a verdict ({status})"));
                        log::error!("case {case} failed to execute: {reason}");
                        result.failures.push((case, reason));
                        self.publish_status(case, "failed", "");
                    }
                    free.push(jobs.finish(case, ok)?);
                }
            }
        }
        result.wall_time = started.elapsed().as_secs_f64();
        result.failures.sort_by_key(|f| f.0);
        Ok(result)
    }
}

/// Blocks until `pid` has exited, leaving it unreaped.
fn wait_exited(pid: u32) {
    let mut info: libc::siginfo_t = unsafe { std::mem::zeroed() };
    // SAFETY: `info` is a valid out-pointer; WNOWAIT leaves the child
    // waitable for `Child::wait`.
    loop {
        let rc = unsafe { libc::waitid(libc::P_PID, pid as libc::id_t, &mut info, libc::WEXITED | libc::WNOWAIT) };
        if rc == 0 || std::io::Error::last_os_error().kind() != std::io::ErrorKind::Interrupted {
            return;
        }
    }
}

fn batch_summary(batch: usize, cases: usize, round: &RoundResult, samples: &[pground_core::kpi::ResourceSample]) -> BatchSummary {
    let times: Vec<f64> = round.serial_times.values().copied().collect();
    BatchSummary {
        batch,
        cases,
        workers: round.workers,
        wall_time: round.wall_time,
        speedup: if times.is_empty() { None } else { speedup_report(&times, round.wall_time).ok() },
        peak: peak_sample(samples),
    }
}

fn store_batch(dir: &Path, stored: &StoredBatch) -> Result<()> {
    let path = dir.join(BATCH_SUMMARY);
    let json = serde_json::to_string_pretty(stored).map_err(|e| Error::Execution(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Executes the campaign (or one batch of it) and writes all logs. With
/// every batch selected the campaign report is written as well.
pub fn run_campaign(cfg: &CampaignConfig, opts: &RunOptions) -> Result<CampaignOutcome> {
    if opts.workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let mut cfg = cfg.clone();
    cfg.campaign.mode = opts.mode;
    cfg.campaign.workers = opts.workers;
    let cases = cfg.cases()?;
    let plan = cfg.batches()?;
    let selected: Vec<usize> = match opts.batch {
        None => (1..=plan.len()).collect(),
        Some(k) if k >= 1 && k <= plan.len() => vec![k],
        Some(k) => {
            return Err(Error::Config(format!("batch {k} does not exist (campaign has {} batches)", plan.len())));
        }
    };
    let campaign_dir = cfg.campaign_dir();
    let resolved = write_resolved(&cfg)?;

    let stream = match opts.mode {
        RunMode::LiveStream => {
            let meta = serde_json::json!({
                "type": "campaign",
                "name": cfg.campaign.name,
                "cases": cases.len(),
                "batches": plan.len(),
                "selected_batches": selected,
                "mode": opts.mode.as_str(),
                "dt": cfg.campaign.dt,
            });
            Some(StreamServer::bind(&cfg.campaign.stream_addr, meta.to_string())?)
        }
        _ => None,
    };
    let coordinator = Coordinator {
        cfg: &cfg,
        resolved,
        opts,
        stream: stream.as_ref(),
        pids: new_worker_set(),
    };
    if opts.batch.is_none() {
        // A full run replaces every earlier batch of this campaign.
        for entry in std::fs::read_dir(&campaign_dir).map_err(|e| Error::io(&campaign_dir, e))?.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            let stale = name.strip_prefix("batch").is_some_and(|k| k.parse::<usize>().is_ok())
                || (name.starts_with("resources_") && name.ends_with(".csv"));
            if stale {
                let p = entry.path();
                let removed = if p.is_dir() { std::fs::remove_dir_all(&p) } else { std::fs::remove_file(&p) };
                removed.map_err(|e| Error::io(&p, e))?;
            }
        }
    }
    for &k in &selected {
        let dir = campaign_dir.join(format!("batch{k}"));
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let batch_cases = |k: usize| -> Vec<(usize, &TestCase)> { plan.batches[k - 1].iter().map(|&id| (k, &cases[id])).collect() };
    let mut failures = Vec::new();
    let mut run_group = |group: Vec<(usize, &TestCase)>, batches: &[usize], resources_name: &str| -> Result<()> {
        log::info!("starting {} cases of batch(es) {batches:?}", group.len());
        // In-process cases are charged to the coordinator itself.
        let in_process = opts.executor == Executor::Thread;
        if in_process {
            coordinator.pids.lock().unwrap_or_else(|e| e.into_inner()).add(std::process::id());
        }
        let sampler = ResourceSampler::start(Arc::clone(&coordinator.pids), cfg.campaign.resource_rate);
        let round = coordinator.run_round(&group);
        let samples = sampler.stop();
        if in_process {
            coordinator.pids.lock().unwrap_or_else(|e| e.into_inner()).forget(std::process::id());
        }
        let round = round?;
        let res_path = campaign_dir.join(resources_name);
        if let Err(e) = write_resources(&res_path, &samples) {
            log::warn!("{e}");
        }
        for &k in batches {
            let ids: Vec<usize> = plan.batches[k - 1].clone();
            let round_k = RoundResult {
                verdicts: BTreeMap::new(),
                serial_times: round.serial_times.iter().filter(|(c, _)| ids.contains(c)).map(|(&c, &t)| (c, t)).collect(),
                failures: round.failures.iter().filter(|(c, _)| ids.contains(c)).cloned().collect(),
                wall_time: round.wall_time,
                workers: round.workers,
            };
            let stored = StoredBatch {
                summary: batch_summary(k, ids.len(), &round_k, &samples),
                failed: round_k.failures.clone(),
            };
            store_batch(&campaign_dir.join(format!("batch{k}")), &stored)?;
        }
        failures.extend(round.failures);
        Ok(())
    };
    if cfg.campaign.cross_batch && selected.len() > 1 {
        let group: Vec<_> = selected.iter().flat_map(|&k| batch_cases(k)).collect();
        run_group(group, &selected, "resources_all.csv")?;
    } else {
        for &k in &selected {
            run_group(batch_cases(k), &[k], &format!("resources_batch{k}.csv"))?;
        }
    }
    if let Some(s) = stream {
        s.shutdown();
    }

    let report = if opts.batch.is_none() {
        write_report(&campaign_dir)?
    } else {
        collect_report(&campaign_dir)?
    };
    Ok(CampaignOutcome { report, campaign_dir, failures })
}

/// Aggregates every verdict and batch summary found under `campaign_dir`.
pub fn collect_report(campaign_dir: &Path) -> Result<CampaignReport> {
    let read_dir = |p: &Path| -> Result<Vec<PathBuf>> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        Ok(entries)
    };
    let mut verdicts = Vec::new();
    let mut batches = Vec::new();
    let mut failed = Vec::new();
    for dir in read_dir(campaign_dir)? {
        let is_batch = dir
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.strip_prefix("batch").is_some_and(|k| k.parse::<usize>().is_ok()));
        if !is_batch || !dir.is_dir() {
            continue;
        }
        let summary = dir.join(BATCH_SUMMARY);
        if let Ok(text) = std::fs::read_to_string(&summary) {
            let stored: StoredBatch = serde_json::from_str(&text)
                .map_err(|e| Error::Execution(format!("{}: {e}", summary.display())))?;
            batches.push(stored.summary);
            failed.extend(stored.failed.into_iter().map(|(c, _)| c));
        }
        for case in read_dir(&dir)? {
            let path = case.join(VERDICT_FILE);
            if !path.is_file() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let v = TestVerdict::from_text(&text).map_err(|e| Error::Execution(format!("{}: {e}", path.display())))?;
            verdicts.push(v);
        }
    }
    verdicts.sort_by_key(|v| v.case_id);
    batches.sort_by_key(|b| b.batch);
    failed.sort_unstable();
    let mut report = aggregate_results(&verdicts);
    report.batches = batches;
    report.failed_cases = failed;
    Ok(report)
}

/// Builds the report from disk and writes `report.csv` and `report.txt`.
pub fn write_report(campaign_dir: &Path) -> Result<CampaignReport> {
    let report = collect_report(campaign_dir)?;
    let csv = campaign_dir.join(REPORT_CSV);
    std::fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
    let txt = campaign_dir.join(REPORT_TXT);
    std::fs::write(&txt, report.to_text()).map_err(|e| Error::io(&txt, e))?;
    Ok(report)
}
