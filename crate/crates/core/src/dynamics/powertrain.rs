use super::params::{Drivetrain, VehicleParams};

/// Time constant of the throttle low-pass, s.
pub const THROTTLE_TIME_CONSTANT: f64 = 0.2;
/// Time constant of the engine-speed smoothing, s.
pub const ENGINE_TIME_CONSTANT: f64 = 0.5;
/// Largest product `τ_drop·|δ|` applied on one side of the differential.
pub const MAX_TORQUE_DROP: f64 = 0.9;

const SNAP: f64 = 1e-9;

/// Engine torque by piecewise-linear interpolation, clamped to the end points
/// outside the map.
pub fn engine_torque(rpm: f64, curve: &[[f64; 2]]) -> f64 {
    let first = curve[0];
    let last = curve[curve.len() - 1];
    if rpm <= first[0] {
        return first[1];
    }
    if rpm >= last[0] {
        return last[1];
    }
    let i = curve.partition_point(|p| p[0] <= rpm);
    let [x0, y0] = curve[i - 1];
    let [x1, y1] = curve[i];
    y0 + (y1 - y0) * (rpm - x0) / (x1 - x0)
}

/// First-order low-pass on the throttle pedal. Settles exactly on the
/// command once within `1e-9`.
pub fn smooth_throttle(previous: f64, command: f64, dt: f64) -> f64 {
    let alpha = 1.0 - (-dt / THROTTLE_TIME_CONSTANT).exp();
    let next = previous + alpha * (command - previous);
    if (next - command).abs() < SNAP {
        command
    } else {
        next
    }
}

/// Torque delivered to the differential, N·m. `throttle` is the smoothed
/// pedal value; the sign follows the gear ratio.
pub fn powertrain_torque(throttle: f64, engine_rpm: f64, gear: i32, params: &VehicleParams) -> f64 {
    let ratio = params.gear_ratio(gear).unwrap_or(0.0);
    engine_torque(engine_rpm, &params.engine_torque_curve) * ratio * params.final_drive * throttle
}

/// Engine speed the drivetrain pulls toward: idle plus the wheel speed
/// reflected through the final drive and gear.
pub fn engine_target_rpm(mean_abs_wheel_rpm: f64, gear: i32, params: &VehicleParams) -> f64 {
    let ratio = params.gear_ratio(gear).unwrap_or(0.0).abs();
    params.idle_rpm + mean_abs_wheel_rpm * params.final_drive * ratio
}

/// Smooths the engine speed toward its target and runs the automatic
/// shifter. Returns `(rpm, gear)`.
///
/// A shift re-engages the clutch, so the engine speed jumps to the new
/// gear's target. Reverse is never entered or left here.
pub fn update_engine_state(
    engine_rpm: f64,
    gear: i32,
    mean_abs_wheel_rpm: f64,
    params: &VehicleParams,
    dt: f64,
) -> (f64, i32) {
    let target = engine_target_rpm(mean_abs_wheel_rpm, gear, params);
    let alpha = 1.0 - (-dt / ENGINE_TIME_CONSTANT).exp();
    let mut rpm = (engine_rpm + alpha * (target - engine_rpm)).max(params.idle_rpm);
    if (rpm - target).abs() < SNAP {
        rpm = target.max(params.idle_rpm);
    }
    let mut next_gear = gear;
    if gear >= 1 {
        if rpm > params.shift_up_rpm && gear < params.top_gear() {
            next_gear = gear + 1;
        } else if rpm < params.shift_down_rpm && gear > 1 {
            next_gear = gear - 1;
        }
    }
    if next_gear != gear {
        rpm = engine_target_rpm(mean_abs_wheel_rpm, next_gear, params).max(params.idle_rpm);
    }
    (rpm, next_gear)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffSplit {
    /// Torque reaching each driven axle's differential.
    pub per_axle: f64,
    pub left: f64,
    pub right: f64,
}

/// Splits the output torque across one driven axle's left and right wheels.
///
/// Steering left (`δ > 0`) drops torque on the right wheel and vice versa;
/// each side's drop factor is clamped to `[0, 0.9]`.
pub fn differential_split(
    total_torque: f64,
    delta: f64,
    drivetrain: Drivetrain,
    torque_drop: f64,
) -> DiffSplit {
    let per_axle = match drivetrain {
        Drivetrain::Fwd | Drivetrain::Rwd => total_torque / 2.0,
        Drivetrain::Awd => total_torque / 4.0,
    };
    let delta_pos = delta.max(0.0);
    let delta_neg = delta.min(0.0);
    let drop_left = (torque_drop * delta_neg.abs()).clamp(0.0, MAX_TORQUE_DROP);
    let drop_right = (torque_drop * delta_pos.abs()).clamp(0.0, MAX_TORQUE_DROP);
    DiffSplit {
        per_axle,
        left: per_axle * (1.0 - drop_left),
        right: per_axle * (1.0 - drop_right),
    }
}

/// Drive torque per wheel in corner order FL, FR, RL, RR.
pub fn wheel_drive_torques(total_torque: f64, delta: f64, params: &VehicleParams) -> [f64; 4] {
    let split = differential_split(total_torque, delta, params.drivetrain, params.torque_drop);
    let mask = params.drivetrain.driven();
    let side = [split.left, split.right, split.left, split.right];
    std::array::from_fn(|i| if mask[i] { side[i] } else { 0.0 })
}
