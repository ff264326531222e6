use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::Lights;
use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::scenario::Scene;

/// Distance reported when the scene has no solid obstacle, m.
pub const DTC_CAP: f64 = 1e6;

pub const KPI_HEADER: &str = "t,aeb_trigger,dtc,collision_count,throttle,brake,speed,lights";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub t: f64,
    pub aeb_trigger: bool,
    pub dtc: f64,
    pub collision_count: u32,
    pub throttle: f64,
    pub brake: f64,
    pub speed: f64,
    pub lights: Lights,
}

/// Smallest gap between the ego box and any solid obstacle; 0 on overlap.
pub fn distance_to_collision(ego: &OrientedBox, scene: &Scene) -> f64 {
    scene
        .solid_obstacles()
        .filter_map(|o| o.oriented_box())
        .map(|b| ego.distance(&b))
        .fold(DTC_CAP, f64::min)
}

/// Edge-triggered collision counter, one rising edge per obstacle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollisionTracker {
    overlapping: Vec<bool>,
    count: u32,
}

impl CollisionTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn update(&mut self, ego: &OrientedBox, scene: &Scene) -> u32 {
        let now: Vec<bool> = scene
            .solid_obstacles()
            .map(|o| o.oriented_box().is_some_and(|b| ego.overlaps(&b)))
            .collect();
        self.overlapping.resize(now.len(), false);
        for (was, is) in self.overlapping.iter_mut().zip(now) {
            if is && !*was {
                self.count += 1;
            }
            *was = is;
        }
        self.count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub case_id: usize,
    pub sut: String,
    pub passed: bool,
    pub min_dtc: f64,
    pub fos_violated: bool,
    pub ticks: usize,
    /// Wall-clock run time, s. Not part of the stored verdict text.
    #[serde(default)]
    pub wall_time: Option<f64>,
}

impl TestVerdict {
    /// Stable `key=value` text; identical for live and replayed runs.
    pub fn to_text(&self) -> String {
        format!(
            "case_id={}\nsut={}\npassed={}\nmin_dtc={:.6}\nfos_violated={}\nticks={}\n",
            self.case_id, self.sut, self.passed, self.min_dtc, self.fos_violated, self.ticks
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut v = TestVerdict {
            case_id: 0,
            sut: String::new(),
            passed: false,
            min_dtc: 0.0,
            fos_violated: false,
            ticks: 0,
            wall_time: None,
        };
        let mut seen = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, val) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidState(format!("malformed verdict line `{line}`")))?;
            let bad = || Error::InvalidState(format!("bad value for `{k}`: `{val}`"));
            match k {
                "case_id" => v.case_id = val.parse().map_err(|_| bad())?,
                "sut" => v.sut = val.to_string(),
                "passed" => v.passed = val.parse().map_err(|_| bad())?,
                "min_dtc" => v.min_dtc = val.parse().map_err(|_| bad())?,
                "fos_violated" => v.fos_violated = val.parse().map_err(|_| bad())?,
                "ticks" => v.ticks = val.parse().map_err(|_| bad())?,
                _ => return Err(Error::InvalidState(format!("unknown verdict key `{k}`"))),
            }
            seen += 1;
        }
        if seen != 6 {
            return Err(Error::InvalidState("verdict is missing keys".into()));
        }
        Ok(v)
    }
}

/// Pass iff no collision by the final record; the FOS is violated when a
/// passing run came closer than `fos`.
pub fn verdict(case_id: usize, sut: &str, records: &[KpiRecord], fos: f64) -> Result<TestVerdict> {
    let last = records.last().ok_or(Error::EmptyRecords)?;
    let min_dtc = records.iter().map(|r| r.dtc).fold(f64::INFINITY, f64::min);
    let passed = last.collision_count == 0;
    Ok(TestVerdict {
        case_id,
        sut: sut.to_string(),
        passed,
        min_dtc,
        fos_violated: passed && min_dtc < fos,
        ticks: records.len(),
        wall_time: None,
    })
}

pub fn write_kpi_csv(records: &[KpiRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(KPI_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:.6},{},{:.6},{},{:.6},{:.6},{:.6},{}",
            r.t, r.aeb_trigger as u8, r.dtc, r.collision_count, r.throttle, r.brake, r.speed, r.lights
        );
    }
    out
}

pub fn parse_kpi_csv(text: &str) -> Result<Vec<KpiRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == KPI_HEADER => {}
        _ => return Err(Error::InvalidState("KPI CSV header mismatch".into())),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = || Error::InvalidState(format!("KPI CSV line {}: `{line}`", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(KpiRecord {
                t: num(f[0])?,
                aeb_trigger: match f[1] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                },
                dtc: num(f[2])?,
                collision_count: f[3].parse().map_err(|_| bad())?,
                throttle: num(f[4])?,
                brake: num(f[5])?,
                speed: num(f[6])?,
                lights: f[7].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
