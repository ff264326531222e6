//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Vector3, Vector4};
use pground::config::{load_config, CampaignConfig, ExternalSutConfig, RunMode};
use pground::instance::{KPI_FILE, TRACE_FILE, VERDICT_FILE};
use pground::resources::parse_resources;
use pground::runner::{run_campaign, CampaignOutcome, Executor, RunOptions};
use pground::trace::replay;
use pground_core::dynamics::{
    ackermann_angles, aero_case, aggregate_inertia, apply_steering, brake_torque, differential_split,
    fit_tire_spline, powertrain_torque, suspension_coefficients, suspension_force, tire_force, AeroCase,
    ControlInput, CornerParams, Drivetrain, SplineControlPoints, Vehicle, VehicleParams, CALIBRATION_SPEED,
    DEFAULT_DT,
};
use pground_core::geometry::pose_xyz_rpy;
use pground_core::kpi::{aggregate_counts, speedup_report, write_kpi_csv, TestVerdict};
use pground_core::scenario::{build_scene, Conditions, Lane, Obstacle, Scene, Shape, TimeOfDay, Weather};
use pground_core::sensors::{
    camera_projection_matrix, encoder_read, lidar_scan, ray_direction, scan_angles, CameraIntrinsics,
    EncoderConfig, LidarConfig, NoiseSource,
};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{name}: got {got}, want {want} (tol {tol:e})"))
}

fn shipped_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/aeb_campaign.toml")
}

fn shipped() -> CampaignConfig {
    load_config(&shipped_path()).expect("shipped config loads")
}

fn process() -> Executor {
    Executor::Process { program: PathBuf::from(env!("CARGO_BIN_EXE_pground")) }
}

fn cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run(cfg: &CampaignConfig, workers: usize, mode: RunMode) -> std::result::Result<CampaignOutcome, String> {
    let opts = RunOptions { mode, workers, batch: None, executor: process() };
    let out = run_campaign(cfg, &opts).map_err(|e| e.to_string())?;
    if !out.success() {
        return Err(format!("cases failed to execute: {:?}", out.failures));
    }
    Ok(out)
}

fn case_dirs(campaign: &Path) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    for batch in std::fs::read_dir(campaign).unwrap().flatten() {
        if batch.path().is_dir() {
            for case in std::fs::read_dir(batch.path()).unwrap().flatten() {
                if case.path().is_dir() {
                    dirs.push(case.path());
                }
            }
        }
    }
    dirs.sort();
    dirs
}

fn read_verdict(dir: &Path) -> TestVerdict {
    TestVerdict::from_text(&std::fs::read_to_string(dir.join(VERDICT_FILE)).unwrap()).unwrap()
}

/// Full campaign at W = 1 and W = 8 in record mode, shared by several criteria.
struct FullRuns {
    serial: CampaignOutcome,
    parallel: CampaignOutcome,
    parallel_secs: f64,
}

fn full_runs(root: &Path) -> std::result::Result<FullRuns, String> {
    let mut a = shipped();
    a.campaign.output_dir = root.join("w1");
    let mut b = shipped();
    b.campaign.output_dir = root.join("w8");
    let serial = run(&a, 1, RunMode::RecordReplay)?;
    let start = Instant::now();
    let parallel = run(&b, 8, RunMode::RecordReplay)?;
    Ok(FullRuns { serial, parallel, parallel_secs: start.elapsed().as_secs_f64() })
}

fn campaign_structure() -> Check {
    let cfg = shipped();
    let cases = cfg.cases().map_err(|e| e.to_string())?;
    let plan = cfg.batches().map_err(|e| e.to_string())?;
    ensure(cases.len() == 256, format!("{} cases", cases.len()))?;
    ensure(plan.len() == 8, format!("{} batches", plan.len()))?;
    ensure(plan.batches.iter().all(|b| b.len() == 32), "batch sizes differ from 32")?;
    let reference = aggregate_counts(&[("m1", 64, 64), ("m2", 27, 64), ("m3", 64, 64), ("m4", 55, 64)]);
    let c = &reference.cumulative;
    ensure((c.passed, c.total) == (210, 256), format!("cumulative {}/{}", c.passed, c.total))?;
    Ok("256 cases in 8x32; reference counts 64, 27, 64, 55 aggregate to 210/256".into())
}

fn profile_ordering(runs: &FullRuns) -> Check {
    let rows = &runs.parallel.report.rows;
    let passed = |name: &str| rows.iter().find(|r| r.sut == name).map(|r| (r.passed, r.total));
    let (Some(a), Some(b), Some(c), Some(d)) = (passed("det-A"), passed("det-B"), passed("det-C"), passed("det-D")) else {
        return Err("missing profile rows".into());
    };
    let detail = format!(
        "A {}/{}, C {}/{}, D {}/{}, B {}/{}; full campaign {:.1} s at W=8 on {} core(s)",
        a.0, a.1, c.0, c.1, d.0, d.1, b.0, b.1, runs.parallel_secs, cores()
    );
    ensure(a == (64, 64), format!("det-A not 64/64: {detail}"))?;
    ensure(a.0 >= c.0 && c.0 >= d.0 && d.0 >= b.0, format!("ordering broken: {detail}"))?;
    ensure(runs.parallel_secs < 300.0, format!("too slow: {detail}"))?;
    Ok(detail)
}

fn determinism(runs: &FullRuns) -> Check {
    let a_dirs = case_dirs(&runs.serial.campaign_dir);
    let b_dirs = case_dirs(&runs.parallel.campaign_dir);
    ensure(a_dirs.len() == 256 && b_dirs.len() == 256, format!("{} and {} case dirs", a_dirs.len(), b_dirs.len()))?;
    for (a, b) in a_dirs.iter().zip(&b_dirs) {
        for name in [KPI_FILE, VERDICT_FILE, TRACE_FILE] {
            let (x, y) = (std::fs::read(a.join(name)), std::fs::read(b.join(name)));
            ensure(x.is_ok() && x.ok() == y.ok(), format!("{} differs between W=1 and W=8", b.join(name).display()))?;
        }
    }
    let report = |o: &CampaignOutcome| std::fs::read(o.campaign_dir.join("report.csv")).ok();
    ensure(report(&runs.serial) == report(&runs.parallel), "report.csv differs")?;
    for dir in &b_dirs {
        let r = replay(&dir.join(TRACE_FILE)).map_err(|e| e.to_string())?;
        let kpi = std::fs::read_to_string(dir.join(KPI_FILE)).unwrap();
        let verdict = std::fs::read_to_string(dir.join(VERDICT_FILE)).unwrap();
        ensure(write_kpi_csv(&r.records) == kpi, format!("{}: replayed KPI differs", dir.display()))?;
        ensure(r.verdict.to_text() == verdict, format!("{}: replayed verdict differs", dir.display()))?;
    }
    Ok("256 KPI/verdict/trace files identical at W=1 and W=8; 256 traces replay byte-for-byte".into())
}

fn fos(runs: &FullRuns) -> Check {
    let verdicts: Vec<TestVerdict> = case_dirs(&runs.parallel.campaign_dir).iter().map(|d| read_verdict(d)).collect();
    let cases = shipped().cases().map_err(|e| e.to_string())?;
    let column: Vec<&TestVerdict> = verdicts
        .iter()
        .filter(|v| {
            let c = &cases[v.case_id];
            v.sut == "det-A" && c.conditions.time_of_day == TimeOfDay::Pm1 && c.conditions.weather == Weather::Clear
        })
        .collect();
    ensure(!column.is_empty(), "no det-A clear/1pm case")?;
    for v in &column {
        ensure(v.passed && v.min_dtc >= 1.0, format!("case {} min_dtc {}", v.case_id, v.min_dtc))?;
    }
    let close_calls: Vec<&TestVerdict> =
        verdicts.iter().filter(|v| v.passed && (1.0..=3.0).contains(&v.min_dtc)).collect();
    ensure(!close_calls.is_empty(), "no passing case with min_dtc in [1, 3] m")?;
    let best = close_calls.iter().map(|v| v.min_dtc).fold(f64::INFINITY, f64::min);
    Ok(format!(
        "det-A clear/1pm min_dtc {:.2} m; {} passing cases in [1, 3] m (closest {best:.2} m)",
        column[0].min_dtc,
        close_calls.len()
    ))
}

/// External SUT that does no work: every answer waits `delay` seconds.
fn sleeper(delay: f64, startup: f64) -> ExternalSutConfig {
    let script = format!(
        "read init; sleep {startup}; while read tick; do sleep {delay}; echo '{{\"control\":{{\"brake\":1.0}}}}'; done"
    );
    ExternalSutConfig { name: "idle".into(), command: vec!["sh".into(), "-c".into(), script] }
}

fn synthetic(root: &Path, name: &str, cases: usize, sut: ExternalSutConfig, ticks: usize) -> CampaignConfig {
    let mut cfg = shipped();
    cfg.campaign.name = name.into();
    cfg.campaign.output_dir = root.to_path_buf();
    cfg.campaign.fixed_ticks = Some(ticks);
    cfg.sensors.lidar_enabled = false;
    cfg.external = vec![sut];
    cfg.matrix.sut_variants = vec!["idle".into()];
    cfg.matrix.times = vec![TimeOfDay::Pm1];
    cfg.matrix.weathers = std::iter::repeat_n(Weather::Clear, cases).collect();
    cfg.matrix.batch_size = cases;
    cfg
}

fn speedup(root: &Path) -> Check {
    let reference = speedup_report(&[180.0; 32], 180.0).map_err(|e| e.to_string())?;
    ensure(reference.achieved == 32.0 && reference.theoretical == 32.0, format!("32x180 s over 180 s gives {reference:?}"))?;
    let mut detail = vec!["32x180 s serial over 180 s wall = 32x".to_string()];
    let w_cores = cores().min(8);
    let mut widths = vec![w_cores];
    if w_cores < 8 {
        // CPU-light cases leave the cores idle, so wider pools still scale.
        widths.push(8);
    }
    for w in widths {
        let cfg = synthetic(&root.join(format!("w{w}")), "speedup", 32, sleeper(0.02, 0.0), 10);
        let out = run(&cfg, w, RunMode::Headless)?;
        let b = out.report.batches.first().ok_or("no batch summary")?;
        let s = b.speedup.ok_or("no speedup figure")?;
        detail.push(format!("W={w}: {:.2}x (>= {:.1})", s.achieved, 0.7 * w as f64));
        ensure(s.achieved >= 0.7 * w as f64, detail.join("; "))?;
    }
    Ok(detail.join("; "))
}

fn resources(root: &Path) -> Check {
    let cfg = synthetic(root, "resources", 2, sleeper(0.0, 30.0), 1);
    let out = run(&cfg, 2, RunMode::Headless)?;
    let path = out.campaign_dir.join("resources_batch1.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (samples, peak) = parse_resources(&text).map_err(|e| e.to_string())?;
    let wall = out.report.batches[0].wall_time;
    let peak = peak.ok_or("no peak row")?;
    ensure((5..=7).contains(&samples.len()), format!("{} samples over {wall:.1} s", samples.len()))?;
    ensure(
        samples.iter().all(|s| peak.cpu_cores_busy >= s.cpu_cores_busy && peak.rss_gb >= s.rss_gb),
        "peak row does not dominate",
    )?;
    Ok(format!("{} samples over a {wall:.1} s batch at 0.2 Hz; peak dominates", samples.len()))
}

fn corner(mass: f64, x: f64, y: f64) -> CornerParams {
    CornerParams { sprung_mass: mass, wheel_mass: 25.0, natural_frequency: 9.0, damping_ratio: 0.35, mount_position: [x, y, 0.0] }
}

fn formula_suite() -> Check {
    let start = Instant::now();
    let tol = 1e-9;

    let k = suspension_coefficients(500.0, 2.0, 0.5).map_err(|e| e.to_string())?;
    close("K", k.stiffness, 2000.0, tol)?;
    close("B", k.damping, 1000.0, tol)?;
    let unit = suspension_coefficients(1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    close("unit K", unit.stiffness, 1.0, tol)?;
    close("unit B", unit.damping, 2.0, tol)?;
    close("spring force", suspension_force(&k, 25.0, 0.1, 0.0, 0.0, 0.0, 0.0), -200.0, tol)?;
    close("damper force", suspension_force(&k, 25.0, 0.0, 0.2, 0.0, 0.0, 0.0), -200.0, tol)?;

    let inertia = aggregate_inertia(&[corner(600.0, 1.4, 0.8), corner(600.0, 1.4, -0.8), corner(400.0, -1.4, 0.8), corner(400.0, -1.4, -0.8)])
        .map_err(|e| e.to_string())?;
    close("X_COM", inertia.center_of_mass.x, 0.28, tol)?;

    let rwd = differential_split(4000.0, 0.0, Drivetrain::Rwd, 0.5);
    close("RWD split", rwd.per_axle, 2000.0, tol)?;
    let awd = differential_split(4000.0, 0.6, Drivetrain::Awd, 2.0);
    close("AWD per axle", awd.per_axle, 1000.0, tol)?;
    close("clamped right", awd.right, 100.0, tol)?;
    close("left", awd.left, 1000.0, tol)?;

    // 500·26.8224²/(2·50)·0.18 evaluated by hand.
    close("brake torque", brake_torque(500.0, 50.0, 0.18, 1.0), 647.497027584, tol)?;
    close("half brake", brake_torque(500.0, 50.0, 0.18, 0.5), 323.748513792, tol)?;

    let mut p = VehicleParams::default();
    p.engine_torque_curve = vec![[1000.0, 300.0], [5000.0, 300.0]];
    p.gear_ratios = vec![3.0, 2.0];
    p.reverse_ratio = -3.0;
    p.final_drive = 4.0;
    close("drive torque", powertrain_torque(1.0, 2000.0, 1, &p), 3600.0, tol)?;
    close("reverse torque", powertrain_torque(1.0, 2000.0, -1, &p), -3600.0, tol)?;

    // Turning radius form: inner/outer wheels sit w/2 either side of the
    // center-line radius l/tanδ.
    let (l, w, delta) = (2.8, 1.6, 0.3);
    let radius = l / f64::tan(delta);
    let (left, right) = ackermann_angles(delta, l, w);
    close("inner", left, (l / (radius - w / 2.0)).atan(), tol)?;
    close("outer", right, (l / (radius + w / 2.0)).atan(), tol)?;
    // The quoted four-digit values are good to about 1e-4 only.
    close("inner approx", left, 0.3272, 1e-4)?;
    close("outer approx", right, 0.2770, 1e-4)?;

    let mut sp = VehicleParams::default();
    sp.steer_sensitivity = 1.0;
    sp.steer_speed_factor = -0.5;
    close("steer step", apply_steering(0.0, 1.0, sp.v_max, &sp, 0.1), 0.05, tol)?;

    let d = VehicleParams::default();
    ensure(aero_case(d.v_max, 100.0, 3, 500.0, &d) == AeroCase::Max, "v = v_max case")?;
    ensure(aero_case(10.0, 0.0, 3, 500.0, &d) == AeroCase::Idle, "idle case")?;
    ensure(aero_case(-d.v_rev, -100.0, -1, -50.0, &d) == AeroCase::Reverse, "reverse case")?;
    ensure(aero_case(10.0, 100.0, 3, 500.0, &d) == AeroCase::Run, "run case")?;

    let pts = SplineControlPoints { origin: [0.0, 0.0], extremum: [0.2, 1.0], asymptote: [0.6, 0.75] };
    let spline = fit_tire_spline(&pts).map_err(|e| e.to_string())?;
    close("F(Se)", spline.eval(0.2), 1.0, tol)?;
    close("F(0.4)", spline.eval(0.4), 0.875, tol)?;
    // Hermite basis at t = 1/2 with m0 = 10 over h = 0.2: 0.5·0 + 0.125·10·0.2 + 0.5·1 − 0.125·0.
    close("F(0.1)", spline.eval(0.1), 0.75, tol)?;
    close("F(Sa)", spline.eval(0.6), 0.75, tol)?;
    close("peak force", tire_force(&spline, 0.2, 4000.0, 1.0), 4000.0, tol)?;
    close("mirrored", tire_force(&spline, -0.2, 4000.0, 1.0), -4000.0, tol)?;

    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("suspension, split, brake, powertrain, Ackermann, aero, spline goldens at 1e-9 in {:.1} ms", secs * 1e3))
}

fn sensor_suite() -> Check {
    let start = Instant::now();
    // 10⁴ directions on an irrational-step grid covering the full sphere.
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let theta = (i as f64 * 0.754_877_666).rem_euclid(1.0) * std::f64::consts::TAU - std::f64::consts::PI;
        let phi = (i as f64 * 0.569_840_290).rem_euclid(1.0) * std::f64::consts::PI - std::f64::consts::FRAC_PI_2;
        worst = worst.max((ray_direction(theta, phi).norm() - 1.0).abs());
    }
    ensure(worst < 1e-12, format!("ray norm error {worst:e}"))?;

    let scene = |obstacles| Scene {
        name: "acceptance".into(),
        obstacles,
        lane: Lane { start: [0.0, 0.0], heading: 0.0, length: 100.0, target_speed: 5.0 },
        ego_spawn: [0.0; 3],
    };
    let deg = std::f64::consts::PI / 180.0;
    let fan = LidarConfig {
        mount_position: [0.0; 3],
        mount_rpy: [0.0; 3],
        r_min: 0.0,
        r_max: 50.0,
        theta_min: -10.0 * deg,
        theta_max: 10.0 * deg,
        theta_res: 10.0 * deg,
        phi_min: 0.0,
        phi_max: 0.0,
        phi_res: deg,
        update_rate: 10.0,
    };
    // Plane through x = 10 with its normal facing the sensor.
    let wall = Obstacle { tag: "wall".into(), shape: Shape::Plane, pose: pose_xyz_rpy(10.0, 0.0, 0.0, 0.0, -std::f64::consts::FRAC_PI_2, 0.0) };
    let cloud = lidar_scan(&pose_xyz_rpy(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), &fan, &scene(vec![wall]), &mut NoiseSource::off(), 0.0, true);
    let ranges: Vec<f64> = cloud.ranges().collect();
    ensure(ranges.len() == 3, format!("{} wall returns", ranges.len()))?;
    for (r, theta) in ranges.iter().zip([-10.0 * deg, 0.0, 10.0 * deg]) {
        close("wall range", *r, 10.0 / theta.cos(), 1e-6)?;
    }

    let (center, radius) = (Vector3::new(20.0, 3.0, -1.0), 4.0);
    let ball = Obstacle { tag: "ball".into(), shape: Shape::Sphere { radius }, pose: pose_xyz_rpy(center.x, center.y, center.z, 0.0, 0.0, 0.0) };
    let cfg = LidarConfig { mount_position: [0.0; 3], r_min: 0.0, ..LidarConfig::default() };
    let cloud = lidar_scan(&pose_xyz_rpy(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), &cfg, &scene(vec![ball]), &mut NoiseSource::off(), 0.0, true);
    let mut expected = 0;
    for (theta, phi) in scan_angles(&cfg) {
        let d = Vector3::new(theta.cos() * phi.cos(), theta.sin() * phi.cos(), -phi.sin());
        let b = d.dot(&center);
        let disc = b * b - (center.norm_squared() - radius * radius);
        if disc >= 0.0 && b - disc.sqrt() > 0.0 {
            expected += 1;
        }
    }
    ensure(cloud.points.len() == expected && expected > 0, format!("{} sphere hits, expected {expected}", cloud.points.len()))?;
    for p in &cloud.points {
        let v = Vector3::from(*p);
        let d = v / v.norm();
        let b = d.dot(&center);
        let t = b - (b * b - (center.norm_squared() - radius * radius)).sqrt();
        close("sphere range", v.norm(), t, 1e-6)?;
    }

    let c = CameraIntrinsics::default();
    let proj = camera_projection_matrix(&c);
    let s = c.far / c.near;
    for (x, y) in [(c.left, c.bottom), (c.left, c.top), (c.right, c.bottom), (c.right, c.top)] {
        for (scale, depth) in [(1.0, -1.0), (s, 1.0)] {
            let clip = proj * Vector4::new(x * scale, y * scale, -c.near * scale, 1.0);
            let ndc = clip.xyz() / clip.w;
            let want = Vector3::new(x.signum(), y.signum(), depth);
            ensure((ndc - want).amax() < 1e-9, format!("corner {x},{y} x{scale} maps to {ndc:?}"))?;
        }
    }
    ensure(encoder_read(&EncoderConfig { ppr: 16, cgr: 120.0 }, 2.5) == 4800, "encoder 16x120x2.5")?;

    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, format!("took {secs:.3} s"))?;
    Ok(format!("10^4 unit rays, wall and {expected}-hit sphere scans at 1e-6, frustum corners at 1e-9 in {:.1} ms", secs * 1e3))
}

fn braking() -> Check {
    let cfg = shipped();
    let vehicle = Vehicle::new(cfg.vehicle.clone()).map_err(|e| e.to_string())?;
    let mut scene = build_scene(pground_core::scenario::AEB_SCENE).map_err(|e| e.to_string())?;
    scene.obstacles.retain(|o| o.tag == "ground");
    let cond = Conditions::default();
    let mut s = vehicle.with_speed(0.0, 0.0, 0.0, CALIBRATION_SPEED);
    let x0 = s.pose[(0, 3)];
    let input = ControlInput { brake: 1.0, ..Default::default() };
    let mut ticks = 0;
    while s.velocity.abs() >= 1e-3 && ticks < 3000 {
        s = vehicle.step(&s, &input, &scene, &cond, DEFAULT_DT).map_err(|e| e.to_string())?;
        ticks += 1;
    }
    let d = s.pose[(0, 3)] - x0;
    let target = cfg.vehicle.braking_distance;
    ensure((d - target).abs() <= 0.1 * target, format!("stopped in {d:.2} m, D_brake {target} m"))?;
    Ok(format!("stopped in {d:.2} m from 26.8224 m/s against D_brake {target} m ({:+.1}%)", (d / target - 1.0) * 100.0))
}

fn main() {
    let root = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(&str, Check)> = Vec::new();
    let mut report = |name: &'static str, r: Check| {
        match &r {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(e) => println!("FAIL  {name}: {e}"),
        }
        results.push((name, r));
    };

    report("campaign structure and aggregation", campaign_structure());
    report("formula suite", formula_suite());
    report("sensor suite", sensor_suite());
    report("braking calibration", braking());
    report("speedup", speedup(&root.path().join("speedup")));
    report("resource sampling", resources(&root.path().join("resources")));
    match full_runs(&root.path().join("full")) {
        Ok(runs) => {
            report("profile ordering", profile_ordering(&runs));
            report("determinism and replay", determinism(&runs));
            report("factor of safety", fos(&runs));
        }
        Err(e) => {
            for name in ["profile ordering", "determinism and replay", "factor of safety"] {
                report(name, Err(format!("full campaign did not run: {e}")));
            }
        }
    }
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("\n{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
