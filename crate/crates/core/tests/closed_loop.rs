//! The AEB stack driving the vehicle model through the stalled-vehicle scene,
//! wired up the way a campaign instance does it but without sensor noise.

use pground_core::dynamics::{Vehicle, VehicleParams, DEFAULT_DT};
use pground_core::kpi::{distance_to_collision, verdict, CollisionTracker, KpiRecord, TestVerdict};
use pground_core::scenario::{build_scene, derive_conditions, ConditionTables, TimeOfDay, Weather, AEB_SCENE};
use pground_core::sensors::{encoder_read, ins_read, CameraConfig, EncoderConfig, NoiseSource};
use pground_core::sut::{default_profiles, observe_targets, AebPlannerConfig, AebStack, SensorFrame, Sut};

fn drive(profile: &str, time: TimeOfDay, weather: Weather, trigger_enabled: bool) -> (Vec<KpiRecord>, TestVerdict) {
    let vehicle = Vehicle::new(VehicleParams::default()).unwrap();
    let scene = build_scene(AEB_SCENE).unwrap();
    let conditions = derive_conditions(time, weather, &ConditionTables::default());
    let camera = CameraConfig::default();
    let profile = default_profiles().into_iter().find(|p| p.name == profile).unwrap();
    let mut stack = AebStack::new(profile, AebPlannerConfig::default(), &camera, scene.lane.target_speed, 7, DEFAULT_DT);
    let [x, y, heading] = scene.ego_spawn;
    let mut state = vehicle.with_speed(x, y, heading, scene.lane.target_speed);
    let mut previous = None;
    let mut tracker = CollisionTracker::new();
    let mut records = Vec::new();
    let mut noise = NoiseSource::off();
    for _ in 0..6000 {
        let ins = ins_read(&state.pose, previous.as_ref(), DEFAULT_DT, &mut noise).unwrap();
        let frame = SensorFrame {
            t: state.time,
            ins,
            encoder_ticks: state.wheel_revolutions.map(|n| encoder_read(&EncoderConfig::default(), n)),
            targets: observe_targets(&state.pose, &camera, &scene),
            lidar_points: 0,
            lidar_min_range: None,
        };
        let detections = stack.perceive(&frame, &conditions).unwrap();
        let trigger = stack.plan(&detections).unwrap() && trigger_enabled;
        let control = stack.act(trigger, &state).unwrap();
        previous = Some(state.pose);
        state = vehicle.step(&state, &control, &scene, &conditions, DEFAULT_DT).unwrap();
        let ego = vehicle.body_box(&state.pose);
        records.push(KpiRecord {
            t: state.time,
            aeb_trigger: trigger,
            dtc: distance_to_collision(&ego, &scene),
            collision_count: tracker.update(&ego, &scene),
            throttle: control.throttle,
            brake: control.brake,
            speed: state.speed(),
            lights: control.lights,
        });
        if tracker.count() > 0 || (trigger && state.speed() < 1e-3) {
            break;
        }
    }
    let v = verdict(0, "test", &records, 1.0).unwrap();
    (records, v)
}

#[test]
fn strong_detector_stops_short_in_daylight() {
    let (records, v) = drive("det-A", TimeOfDay::Pm1, Weather::Clear, true);
    assert!(v.passed, "{v:?}");
    assert!(!v.fos_violated);
    assert!(records.last().unwrap().speed < 1e-3);
    let first_trigger = records.iter().position(|r| r.aeb_trigger).unwrap();
    // Once braking, the trigger stays latched and the brake stays on.
    assert!(records[first_trigger..].iter().all(|r| r.aeb_trigger && r.brake > 0.0));
    // Closing in on the obstacle until the stop; the body may settle back by
    // a few micrometres afterwards.
    let stop = records.iter().position(|r| r.speed < 1e-3).unwrap();
    for w in records[..=stop].windows(2) {
        assert!(w[1].dtc <= w[0].dtc + 1e-9, "dtc rose at t={} by {:e} at speed {}", w[1].t, w[1].dtc - w[0].dtc, w[1].speed);
    }
}

#[test]
fn disabled_trigger_collides() {
    let (records, v) = drive("det-A", TimeOfDay::Pm1, Weather::Clear, false);
    assert!(!v.passed);
    assert_eq!(v.min_dtc, 0.0);
    assert_eq!(records.last().unwrap().collision_count, 1);
}

#[test]
fn closed_loop_is_deterministic() {
    let a = drive("det-B", TimeOfDay::Am5, Weather::HeavyFog, true);
    let b = drive("det-B", TimeOfDay::Am5, Weather::HeavyFog, true);
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}
