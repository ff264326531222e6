//! Newline-delimited trace records and replay.
//!
//! A trace is a header line, one tick line per simulation tick and an end
//! line. Replay rebuilds the KPI rows from the recorded poses, controls and
//! triggers without touching the dynamics, so it reproduces the live KPI log
//! and verdict exactly.

use std::io::BufRead;
use std::path::Path;

use nalgebra::{Matrix4, Vector3};
use pground_core::dynamics::ControlInput;
use pground_core::geometry::OrientedBox;
use pground_core::kpi::{distance_to_collision, verdict, CollisionTracker, KpiRecord, TestVerdict};
use pground_core::scenario::{Conditions, Scene};
use pground_core::sut::Detection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: u32,
    pub campaign: String,
    pub case_id: usize,
    pub sut: String,
    pub seed: u64,
    pub conditions: Conditions,
    pub scene: Scene,
    pub ego_dimensions: [f64; 3],
    pub dt: f64,
    pub fos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    /// Body pose, column-major 4x4.
    pub pose: [f64; 16],
    pub velocity: f64,
    pub lateral_velocity: f64,
    pub yaw_rate: f64,
    pub wheel_rpm: [f64; 4],
    pub engine_rpm: f64,
    pub gear: i32,
    pub steering_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSummary {
    pub ins_position: [f64; 3],
    pub ins_velocity: [f64; 3],
    pub encoder_ticks: [i64; 4],
    pub lidar_points: usize,
    pub lidar_min_range: Option<f64>,
    pub targets_in_view: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: usize,
    pub t: f64,
    pub state: StateSummary,
    pub sensors: SensorSummary,
    pub detections: Vec<Detection>,
    pub control: ControlInput,
    pub trigger: bool,
    pub kpi: KpiRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEnd {
    pub ticks: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Tick(TickRecord),
    End(TraceEnd),
}

impl TraceLine {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}

pub fn pose_to_array(pose: &Matrix4<f64>) -> [f64; 16] {
    let mut out = [0.0; 16];
    out.copy_from_slice(pose.as_slice());
    out
}

pub fn pose_from_array(a: &[f64; 16]) -> Matrix4<f64> {
    Matrix4::from_column_slice(a)
}

/// Rebuilds one KPI row from what a tick recorded.
pub fn kpi_from_tick(
    tick: &TickRecord,
    dims: &Vector3<f64>,
    scene: &Scene,
    tracker: &mut CollisionTracker,
) -> KpiRecord {
    let ego = OrientedBox::from_pose(&pose_from_array(&tick.state.pose), dims);
    KpiRecord {
        t: tick.t,
        aeb_trigger: tick.trigger,
        dtc: distance_to_collision(&ego, scene),
        collision_count: tracker.update(&ego, scene),
        throttle: tick.control.throttle,
        brake: tick.control.brake,
        speed: tick.state.velocity.abs(),
        lights: tick.control.lights,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub header: TraceHeader,
    pub records: Vec<KpiRecord>,
    pub verdict: TestVerdict,
}

/// Replays a stored trace. Every line is checked; the first malformed,
/// missing or inconsistent line is reported by number.
pub fn replay(path: &Path) -> Result<Replay> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    replay_reader(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn replay_reader(reader: impl BufRead, origin: &str) -> Result<Replay> {
    let fail = |line: usize, reason: String| Error::Trace { path: origin.to_string(), line, reason };
    let mut header: Option<TraceHeader> = None;
    let mut dims = Vector3::zeros();
    let mut tracker = CollisionTracker::new();
    let mut records = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    let mut ended = false;
    let mut line_no = 0;
    for line in reader.lines() {
        line_no += 1;
        let line = line.map_err(|e| fail(line_no, e.to_string()))?;
        if ended {
            return Err(fail(line_no, "content after the end record".into()));
        }
        let parsed: TraceLine =
            serde_json::from_str(&line).map_err(|e| fail(line_no, format!("malformed record: {e}")))?;
        match (parsed, &header) {
            (TraceLine::Header(h), None) => {
                if h.schema != TRACE_SCHEMA {
                    return Err(fail(line_no, format!("unsupported schema version {}", h.schema)));
                }
                dims = Vector3::from(h.ego_dimensions);
                header = Some(h);
            }
            (_, None) => return Err(fail(line_no, "expected the header record first".into())),
            (TraceLine::Header(_), Some(_)) => return Err(fail(line_no, "duplicate header".into())),
            (TraceLine::Tick(tick), Some(h)) => {
                if tick.tick != records.len() {
                    return Err(fail(
                        line_no,
                        format!("expected tick {}, found tick {} (missing or reordered lines)", records.len(), tick.tick),
                    ));
                }
                if !(tick.t > last_t) {
                    return Err(fail(line_no, format!("time {} is not after {last_t}", tick.t)));
                }
                last_t = tick.t;
                let row = kpi_from_tick(&tick, &dims, &h.scene, &mut tracker);
                if row != tick.kpi {
                    return Err(fail(line_no, "recorded KPI row disagrees with the recorded state".into()));
                }
                records.push(row);
            }
            (TraceLine::End(end), Some(_)) => {
                if end.ticks != records.len() {
                    return Err(fail(line_no, format!("end record claims {} ticks, found {}", end.ticks, records.len())));
                }
                ended = true;
            }
        }
    }
    let header = header.ok_or_else(|| fail(1, "empty trace".into()))?;
    if !ended {
        return Err(fail(line_no + 1, "trace is truncated: no end record".into()));
    }
    let verdict = verdict(header.case_id, &header.sut, &records, header.fos)
        .map_err(|e| fail(line_no, e.to_string()))?;
    Ok(Replay { header, records, verdict })
}
