//! Periodic CPU and memory sampling of live worker processes.
//!
//! CPU load is the number of busy cores over the last period, from the
//! `utime + stime` deltas in `/proc/<pid>/stat`; memory is the summed
//! `VmRSS`. Sampling failures are logged and the affected process skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use pground_core::kpi::{peak_sample, ResourceSample};

use crate::error::{Error, Result};

/// Workers the sampler should account for.
#[derive(Debug, Default)]
pub struct WorkerSet {
    live: Vec<u32>,
    /// Final CPU counters of workers that exited since the last sample.
    retired: Vec<(u32, u64)>,
}

pub type LivePids = Arc<Mutex<WorkerSet>>;

pub fn new_worker_set() -> LivePids {
    Arc::new(Mutex::new(WorkerSet::default()))
}

impl WorkerSet {
    pub fn add(&mut self, pid: u32) {
        self.live.push(pid);
    }

    /// Removes `pid`. Call before reaping the process so its final CPU time
    /// can still be read and charged to the next sample.
    pub fn retire(&mut self, pid: u32) {
        if let Some(i) = self.live.iter().position(|&p| p == pid) {
            self.live.remove(i);
            if let Some(t) = cpu_ticks(pid) {
                self.retired.push((pid, t));
            }
        }
    }

    /// Removes `pid` without charging it (the process keeps running).
    pub fn forget(&mut self, pid: u32) {
        if let Some(i) = self.live.iter().position(|&p| p == pid) {
            self.live.remove(i);
        }
    }
}

fn clock_ticks_per_second() -> f64 {
    // SAFETY: sysconf has no preconditions.
    let hz = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if hz > 0 {
        hz as f64
    } else {
        100.0
    }
}

/// CPU time consumed so far by `pid`, in clock ticks.
fn cpu_ticks(pid: u32) -> Option<u64> {
    let stat = std::fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
    // The command name may contain spaces; fields resume after the last ')'.
    let rest = &stat[stat.rfind(')')? + 1..];
    let fields: Vec<&str> = rest.split_whitespace().collect();
    let utime: u64 = fields.get(11)?.parse().ok()?;
    let stime: u64 = fields.get(12)?.parse().ok()?;
    Some(utime + stime)
}

/// Resident set size of `pid`, bytes.
fn rss_bytes(pid: u32) -> Option<u64> {
    let status = std::fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

struct Probe {
    hz: f64,
    last: HashMap<u32, u64>,
}

impl Probe {
    fn new() -> Self {
        Probe { hz: clock_ticks_per_second(), last: HashMap::new() }
    }

    /// Records the current counters as the baseline for `pids`.
    fn prime(&mut self, pids: &[u32]) {
        for &pid in pids {
            if let Some(t) = cpu_ticks(pid) {
                self.last.insert(pid, t);
            }
        }
    }

    fn sample(&mut self, workers: &mut WorkerSet, t: f64, period: f64) -> ResourceSample {
        let mut busy_ticks = 0u64;
        let mut rss = 0u64;
        for (pid, ticks) in workers.retired.drain(..) {
            let base = self.last.get(&pid).copied().unwrap_or(0);
            busy_ticks += ticks.saturating_sub(base);
        }
        let pids = &workers.live;
        let mut seen = HashMap::with_capacity(pids.len());
        for &pid in pids {
            match (cpu_ticks(pid), rss_bytes(pid)) {
                (Some(ticks), Some(bytes)) => {
                    // A worker first seen now is charged everything it used so far.
                    let base = self.last.get(&pid).copied().unwrap_or(0);
                    busy_ticks += ticks.saturating_sub(base);
                    rss += bytes;
                    seen.insert(pid, ticks);
                }
                _ => log::debug!("resource sample: process {pid} not readable (exited?)"),
            }
        }
        self.last = seen;
        ResourceSample {
            t,
            cpu_cores_busy: if period > 0.0 { busy_ticks as f64 / self.hz / period } else { 0.0 },
            rss_gb: rss as f64 / 1e9,
        }
    }
}

/// Background sampler for one batch.
pub struct ResourceSampler {
    stop: Arc<(Mutex<bool>, Condvar)>,
    handle: JoinHandle<Vec<ResourceSample>>,
}

impl ResourceSampler {
    /// Samples `pids` at the end of every `1 / rate` second period until
    /// stopped.
    pub fn start(pids: LivePids, rate: f64) -> Self {
        let stop = Arc::new((Mutex::new(false), Condvar::new()));
        let flag = Arc::clone(&stop);
        let period = 1.0 / rate;
        let handle = std::thread::spawn(move || {
            let start = Instant::now();
            let mut probe = Probe::new();
            let mut samples = Vec::new();
            let mut last_t = 0.0;
            probe.prime(&pids.lock().unwrap_or_else(|e| e.into_inner()).live);
            let (lock, cvar) = &*flag;
            let mut k = 1u32;
            loop {
                let deadline = start + Duration::from_secs_f64(period * k as f64);
                let mut stopped = lock.lock().unwrap_or_else(|e| e.into_inner());
                while !*stopped {
                    let now = Instant::now();
                    if now >= deadline {
                        break;
                    }
                    stopped = cvar.wait_timeout(stopped, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
                }
                let done = *stopped;
                drop(stopped);
                let t = start.elapsed().as_secs_f64();
                if done {
                    // Short batches still get one sample.
                    if samples.is_empty() {
                        let mut workers = pids.lock().unwrap_or_else(|e| e.into_inner());
                        samples.push(probe.sample(&mut workers, t, t - last_t));
                    }
                    return samples;
                }
                let mut workers = pids.lock().unwrap_or_else(|e| e.into_inner());
                samples.push(probe.sample(&mut workers, t, t - last_t));
                drop(workers);
                last_t = t;
                k += 1;
            }
        });
        ResourceSampler { stop, handle }
    }

    pub fn stop(self) -> Vec<ResourceSample> {
        let (lock, cvar) = &*self.stop;
        *lock.lock().unwrap_or_else(|e| e.into_inner()) = true;
        cvar.notify_all();
        self.handle.join().unwrap_or_else(|_| {
            log::warn!("resource sampler panicked; batch has no samples");
            Vec::new()
        })
    }
}

pub const RESOURCE_HEADER: &str = "t,cpu_cores_busy,rss_gb";

/// Sample rows followed by a `peak` row.
pub fn resources_csv(samples: &[ResourceSample]) -> String {
    let mut out = String::from(RESOURCE_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(out, "{:.3},{:.6},{:.6}", s.t, s.cpu_cores_busy, s.rss_gb);
    }
    if let Some(p) = peak_sample(samples) {
        let _ = writeln!(out, "peak,{:.6},{:.6}", p.cpu_cores_busy, p.rss_gb);
    }
    out
}

pub fn write_resources(path: &Path, samples: &[ResourceSample]) -> Result<()> {
    std::fs::write(path, resources_csv(samples)).map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_resources`] into samples and the peak row.
pub fn parse_resources(text: &str) -> Result<(Vec<ResourceSample>, Option<ResourceSample>)> {
    let mut lines = text.lines();
    if lines.next() != Some(RESOURCE_HEADER) {
        return Err(Error::Execution("resource CSV header mismatch".into()));
    }
    let mut samples = Vec::new();
    let mut peak = None;
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Execution(format!("bad resource row `{line}`"));
        if f.len() != 3 {
            return Err(bad());
        }
        let cpu = f[1].parse().map_err(|_| bad())?;
        let rss = f[2].parse().map_err(|_| bad())?;
        if f[0] == "peak" {
            peak = Some(ResourceSample { t: f64::NAN, cpu_cores_busy: cpu, rss_gb: rss });
        } else {
            samples.push(ResourceSample { t: f[0].parse().map_err(|_| bad())?, cpu_cores_busy: cpu, rss_gb: rss });
        }
    }
    Ok((samples, peak))
}
