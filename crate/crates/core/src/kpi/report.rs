use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::record::TestVerdict;
use super::resources::ResourceSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SutRow {
    pub sut: String,
    pub passed: usize,
    pub total: usize,
    pub fos_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub theoretical: f64,
    pub achieved: f64,
    pub efficiency: f64,
}

/// `theoretical` is the batch size, `achieved` the summed serial run time
/// over the batch wall time.
pub fn speedup_report(serial_times: &[f64], wall_time: f64) -> Result<SpeedupReport> {
    if !(wall_time > 0.0) {
        return Err(Error::invalid("wall_time", "must be > 0"));
    }
    let theoretical = serial_times.len() as f64;
    let achieved = serial_times.iter().sum::<f64>() / wall_time;
    let efficiency = if theoretical > 0.0 { achieved / theoretical } else { 0.0 };
    Ok(SpeedupReport { theoretical, achieved, efficiency })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    /// 1-based batch index.
    pub batch: usize,
    pub cases: usize,
    pub workers: usize,
    pub wall_time: f64,
    pub speedup: Option<SpeedupReport>,
    pub peak: Option<ResourceSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub rows: Vec<SutRow>,
    pub cumulative: SutRow,
    pub batches: Vec<BatchSummary>,
    /// Cases whose worker failed to produce a verdict.
    pub failed_cases: Vec<usize>,
}

/// Adds up `(sut, passed, total)` groups into report rows.
pub fn aggregate_counts(groups: &[(&str, usize, usize)]) -> CampaignReport {
    let rows: Vec<SutRow> = groups
        .iter()
        .map(|&(sut, passed, total)| SutRow { sut: sut.to_string(), passed, total, fos_violations: 0 })
        .collect();
    finish(rows)
}

/// Groups verdicts by SUT in order of first appearance.
pub fn aggregate_results(verdicts: &[TestVerdict]) -> CampaignReport {
    let mut rows: Vec<SutRow> = Vec::new();
    for v in verdicts {
        let idx = match rows.iter().position(|r| r.sut == v.sut) {
            Some(i) => i,
            None => {
                rows.push(SutRow { sut: v.sut.clone(), passed: 0, total: 0, fos_violations: 0 });
                rows.len() - 1
            }
        };
        let row = &mut rows[idx];
        row.total += 1;
        row.passed += v.passed as usize;
        row.fos_violations += v.fos_violated as usize;
    }
    finish(rows)
}

fn finish(rows: Vec<SutRow>) -> CampaignReport {
    let cumulative = SutRow {
        sut: "cumulative".into(),
        passed: rows.iter().map(|r| r.passed).sum(),
        total: rows.iter().map(|r| r.total).sum(),
        fos_violations: rows.iter().map(|r| r.fos_violations).sum(),
    };
    CampaignReport { rows, cumulative, batches: Vec::new(), failed_cases: Vec::new() }
}

impl CampaignReport {
    /// Outcome table; contains no timing data.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sut,passed,total,fos_violations\n");
        for r in self.rows.iter().chain(std::iter::once(&self.cumulative)) {
            let _ = writeln!(out, "{},{},{},{}", r.sut, r.passed, r.total, r.fos_violations);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.sut.len())
            .chain([10])
            .max()
            .unwrap_or(10);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>4}", "SUT", "passed", "total", "FOS");
        let _ = writeln!(out, "{}", "-".repeat(width + 22));
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>4}", r.sut, r.passed, r.total, r.fos_violations);
        }
        let _ = writeln!(out, "{}", "-".repeat(width + 22));
        let c = &self.cumulative;
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>4}", c.sut, c.passed, c.total, c.fos_violations);
        if !self.failed_cases.is_empty() {
            let ids: Vec<String> = self.failed_cases.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "\nfailed to execute: {}", ids.join(", "));
        }
        if !self.batches.is_empty() {
            let _ = writeln!(out, "\nbatch  cases  workers  wall_s    speedup  efficiency  peak_cpu  peak_rss_gb");
            for b in &self.batches {
                let (sp, eff) = b
                    .speedup
                    .map(|s| (format!("{:.2}x", s.achieved), format!("{:.2}", s.efficiency)))
                    .unwrap_or(("-".into(), "-".into()));
                let (cpu, rss) = b
                    .peak
                    .map(|p| (format!("{:.2}", p.cpu_cores_busy), format!("{:.3}", p.rss_gb)))
                    .unwrap_or(("-".into(), "-".into()));
                let _ = writeln!(
                    out,
                    "{:>5}  {:>5}  {:>7}  {:>8.2}  {:>8}  {:>10}  {:>8}  {:>11}",
                    b.batch, b.cases, b.workers, b.wall_time, sp, eff, cpu, rss
                );
            }
        }
        out
    }
}
