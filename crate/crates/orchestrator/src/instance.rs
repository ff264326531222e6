//! One test case: the fixed-step sensors, SUT, dynamics, KPI loop.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pground_core::dynamics::{Vehicle, VehicleState};
use pground_core::geometry::Pose;
use pground_core::kpi::{distance_to_collision, verdict, write_kpi_csv, CollisionTracker, KpiRecord, TestVerdict};
use pground_core::scenario::TestCase;
use pground_core::sensors::{encoder_read, ins_read, lidar_scan, NoiseModel, NoiseSource};
use pground_core::sut::{observe_targets, AebStack, ExternalInit, ExternalSut, SensorFrame, Sut};

use crate::config::{CampaignConfig, RunMode};
use crate::error::{Error, Result};
use crate::trace::{pose_to_array, SensorSummary, StateSummary, TickRecord, TraceEnd, TraceHeader, TraceLine, TRACE_SCHEMA};

pub const KPI_FILE: &str = "kpi.csv";
pub const TRACE_FILE: &str = "trace.ndjson";
pub const VERDICT_FILE: &str = "verdict.txt";

/// Speed below which the ego counts as stopped, m/s.
pub const STOP_SPEED: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub verdict: TestVerdict,
    pub kpi_path: PathBuf,
    pub trace_path: Option<PathBuf>,
    pub verdict_path: PathBuf,
    /// Why the loop ended.
    pub reason: String,
}

/// `out/<campaign>/batch<k>/case<id>`.
pub fn case_dir(campaign_dir: &Path, batch: usize, case_id: usize) -> PathBuf {
    campaign_dir.join(format!("batch{batch}")).join(format!("case{case_id:04}"))
}

fn seeded(model: &NoiseModel, case_seed: u64, salt: u64) -> NoiseSource {
    let mut m = model.clone();
    m.seed = m.seed ^ case_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
    NoiseSource::new(m)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `case` and writes its logs under `dir`. Every trace line is also
/// handed to `on_trace` (used for live streaming).
///
/// A diverged simulation still writes the KPI rows up to the last valid tick
/// before returning the error.
pub fn run_instance(
    case: &TestCase,
    cfg: &CampaignConfig,
    mode: RunMode,
    dir: &Path,
    on_trace: &mut dyn FnMut(&str),
) -> Result<InstanceResult> {
    let started = Instant::now();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let c = &cfg.campaign;
    let dt = c.dt;
    let scene = cfg.build_scene()?;
    let vehicle = Vehicle::new(cfg.vehicle.clone())?;
    let sensors = &cfg.sensors;
    let mut sut: Box<dyn Sut> = match (cfg.profile(&case.sut), cfg.external_sut(&case.sut)) {
        (Some(profile), _) => Box::new(AebStack::new(
            profile.clone(),
            cfg.planner.clone(),
            &sensors.camera,
            scene.lane.target_speed,
            case.seed,
            dt,
        )),
        (None, Some(ext)) => Box::new(ExternalSut::spawn(
            &ext.command,
            &ExternalInit { case_id: case.id, seed: case.seed, dt, target_speed: scene.lane.target_speed },
        )?),
        (None, None) => return Err(Error::Config(format!("unknown SUT `{}`", case.sut))),
    };
    let mut ins_noise = seeded(&sensors.ins_noise, case.seed, sensors.seed_salt);
    let mut lidar_noise = seeded(&sensors.lidar_noise, case.seed, sensors.seed_salt.rotate_left(17));

    let [x, y, heading] = scene.ego_spawn;
    let mut state = if c.rolling_start {
        vehicle.with_speed(x, y, heading, scene.lane.target_speed)
    } else {
        vehicle.at_rest(x, y, heading)
    };
    let dims = cfg.vehicle.body_dimensions;

    let trace_path = mode.records_trace().then(|| dir.join(TRACE_FILE));
    let mut trace = match &trace_path {
        Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| Error::io(p, e))?)),
        None => None,
    };
    let mut emit = |line: &TraceLine, trace: &mut Option<std::io::BufWriter<std::fs::File>>| -> Result<()> {
        if let Some(w) = trace {
            let json = line.to_json();
            writeln!(w, "{json}").map_err(|e| Error::io(trace_path.as_ref().unwrap(), e))?;
            on_trace(&json);
        }
        Ok(())
    };
    emit(
        &TraceLine::Header(TraceHeader {
            schema: TRACE_SCHEMA,
            campaign: c.name.clone(),
            case_id: case.id,
            sut: case.sut.clone(),
            seed: case.seed,
            conditions: case.conditions,
            scene: scene.clone(),
            ego_dimensions: dims,
            dt,
            fos: c.fos,
        }),
        &mut trace,
    )?;

    let lidar_every = ((1.0 / (sensors.lidar.update_rate * dt)).round() as usize).max(1);
    let max_ticks = c.fixed_ticks.unwrap_or_else(|| (case.timeout / dt).round() as usize);
    let hold_ticks = (c.stop_hold / dt).round() as usize;
    let mut prev_pose: Option<Pose> = None;
    let mut lidar_summary = (0usize, None);
    let mut tracker = CollisionTracker::new();
    let mut records: Vec<KpiRecord> = Vec::new();
    let mut triggered = false;
    let mut settle_tick: Option<usize> = None;
    let mut reason = String::from("tick budget");
    let mut failure: Option<Error> = None;

    for tick in 0..max_ticks {
        let pose = state.pose;
        let ins = match ins_read(&pose, prev_pose.as_ref(), dt, &mut ins_noise) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e.into());
                break;
            }
        };
        let encoder_ticks = state.wheel_revolutions.map(|r| encoder_read(&sensors.encoder, r));
        if sensors.lidar_enabled && tick % lidar_every == 0 {
            let cloud = lidar_scan(&pose, &sensors.lidar, &scene, &mut lidar_noise, state.time, false);
            lidar_summary = (cloud.points.len(), cloud.min_range());
        }
        let targets = observe_targets(&pose, &sensors.camera, &scene);
        let frame = SensorFrame {
            t: state.time,
            ins,
            encoder_ticks,
            targets,
            lidar_points: lidar_summary.0,
            lidar_min_range: lidar_summary.1,
        };

        let step = (|| -> pground_core::Result<_> {
            let detections = sut.perceive(&frame, &case.conditions)?;
            let trigger = sut.plan(&detections)?;
            let input = sut.act(trigger, &state)?;
            let next = vehicle.step(&state, &input, &scene, &case.conditions, dt)?;
            Ok((detections, trigger, input, next))
        })();
        let (detections, trigger, input, next): (_, bool, _, VehicleState) = match step {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e.into());
                break;
            }
        };

        let ego = vehicle.body_box(&next.pose);
        let record = KpiRecord {
            t: next.time,
            aeb_trigger: trigger,
            dtc: distance_to_collision(&ego, &scene),
            collision_count: tracker.update(&ego, &scene),
            throttle: input.throttle,
            brake: input.brake,
            speed: next.velocity.abs(),
            lights: input.lights,
        };
        if trace.is_some() {
            let tick_line = TraceLine::Tick(TickRecord {
                tick,
                t: next.time,
                state: StateSummary {
                    pose: pose_to_array(&next.pose),
                    velocity: next.velocity,
                    lateral_velocity: next.lateral_velocity,
                    yaw_rate: next.angular_velocity[2],
                    wheel_rpm: next.wheel_rpm(),
                    engine_rpm: next.engine_rpm,
                    gear: next.gear,
                    steering_angle: next.steering_angle,
                },
                sensors: SensorSummary {
                    ins_position: frame.ins.position.into(),
                    ins_velocity: frame.ins.velocity.into(),
                    encoder_ticks,
                    lidar_points: frame.lidar_points,
                    lidar_min_range: frame.lidar_min_range,
                    targets_in_view: frame.targets.iter().filter(|t| t.in_view).count(),
                },
                detections,
                control: input,
                trigger,
                kpi: record,
            });
            emit(&tick_line, &mut trace)?;
        }
        records.push(record);
        triggered |= trigger;
        prev_pose = Some(pose);
        state = next;

        if c.fixed_ticks.is_none() {
            if settle_tick.is_none() {
                if record.collision_count > 0 {
                    settle_tick = Some(tick);
                    reason = "collision".into();
                } else if triggered && record.speed < STOP_SPEED {
                    settle_tick = Some(tick);
                    reason = "stopped".into();
                }
            }
            if settle_tick.is_some_and(|s| tick - s >= hold_ticks) {
                break;
            }
        }
    }

    let kpi_path = dir.join(KPI_FILE);
    write_file(&kpi_path, &write_kpi_csv(&records))?;
    if let Some(e) = failure {
        let last = records.len().checked_sub(1).map_or("none".to_string(), |t| t.to_string());
        return Err(Error::Execution(format!("case {}: {e} (last valid tick {last})", case.id)));
    }
    emit(&TraceLine::End(TraceEnd { ticks: records.len(), reason: reason.clone() }), &mut trace)?;
    if let Some(mut w) = trace.take() {
        w.flush().map_err(|e| Error::io(trace_path.as_ref().unwrap(), e))?;
    }

    let mut v = verdict(case.id, &case.sut, &records, c.fos)?;
    let verdict_path = dir.join(VERDICT_FILE);
    write_file(&verdict_path, &v.to_text())?;
    v.wall_time = Some(started.elapsed().as_secs_f64());
    log::debug!("case {} finished after {} ticks ({reason})", case.id, records.len());
    Ok(InstanceResult { verdict: v, kpi_path, trace_path, verdict_path, reason })
}

