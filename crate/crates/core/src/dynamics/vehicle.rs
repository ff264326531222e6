//! Fixed-timestep integration of the full vehicle.
//!
//! Vertical corner motion and planar motion are advanced separately each
//! tick. Both use a linearly implicit velocity update followed by a position
//! update with the new velocities: the tire slip stiffness makes a fully
//! explicit update unstable at the default timestep.

use nalgebra::{Matrix2, Rotation3, SMatrix, SVector, Vector2, Vector3};

use super::aero::{aero_case, aero_drag_magnitude, DRAG_RAMP_SPEED};
use super::brakes::brake_torque;
use super::inertia::aggregate_inertia;
use super::params::VehicleParams;
use super::powertrain::{powertrain_torque, smooth_throttle, update_engine_state, wheel_drive_torques};
use super::state::{rad_s_to_rpm, ControlInput, VehicleState};
use super::steering::{ackermann_angles, apply_steering};
use super::suspension::{suspension_coefficients, SuspensionCoefficients};
use super::tire::{fit_tire_spline, tire_force, TireSpline};
use crate::error::{Error, Result};
use crate::geometry::{pose_from_parts, OrientedBox, Pose};
use crate::scenario::{Conditions, Scene};
use crate::GRAVITY;

/// Default simulation timestep, s.
pub const DEFAULT_DT: f64 = 0.01;

/// Speed floor in the slip denominators, m/s.
const SLIP_SPEED_FLOOR: f64 = 0.1;
/// Reverse engages or disengages only below this speed, m/s.
const GEAR_CHANGE_SPEED: f64 = 0.5;

type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;

/// Immutable vehicle model. Shareable across simulation instances.
#[derive(Debug, Clone)]
pub struct Vehicle {
    pub params: VehicleParams,
    long: TireSpline,
    lat: TireSpline,
    suspension: [SuspensionCoefficients; 4],
    /// Sprung plus unsprung mass, kg.
    mass: f64,
    yaw_inertia: f64,
    wheel_inertia: [f64; 4],
    brake_capacity: [f64; 4],
    /// Planar center of mass in the body frame.
    com: Vector2<f64>,
    /// Wheel contact points relative to the center of mass.
    arms: [Vector2<f64>; 4],
    dimensions: Vector3<f64>,
}

/// Per-tick quantities held fixed during the planar solve.
struct PlanarInputs {
    steer: [f64; 4],
    load: [f64; 4],
    drive: [f64; 4],
    brake: [f64; 4],
    brake_dir: [f64; 4],
    traction: f64,
    drag: f64,
}

impl Vehicle {
    pub fn new(params: VehicleParams) -> Result<Self> {
        params.validate()?;
        let long = fit_tire_spline(&params.tire_long)?;
        let lat = fit_tire_spline(&params.tire_lat)?;
        let sprung = aggregate_inertia(&params.corners)?;
        let mut suspension = [SuspensionCoefficients { stiffness: 0.0, damping: 0.0 }; 4];
        for (s, c) in suspension.iter_mut().zip(&params.corners) {
            *s = suspension_coefficients(c.sprung_mass, c.natural_frequency, c.damping_ratio)?;
        }
        let mass: f64 = params.corners.iter().map(|c| c.sprung_mass + c.wheel_mass).sum();
        let com = params.corners.iter().fold(Vector2::zeros(), |acc, c| {
            acc + Vector2::new(c.mount_position[0], c.mount_position[1]) * (c.sprung_mass + c.wheel_mass)
        }) / mass;
        let arms: [Vector2<f64>; 4] = std::array::from_fn(|i| {
            let p = params.corners[i].mount_position;
            Vector2::new(p[0], p[1]) - com
        });
        let sprung_com = sprung.center_of_mass.xy();
        let yaw_inertia = params
            .corners
            .iter()
            .zip(&arms)
            .map(|(c, a)| {
                let p = Vector2::new(c.mount_position[0], c.mount_position[1]);
                c.sprung_mass * (p - sprung_com).norm_squared() + c.wheel_mass * a.norm_squared()
            })
            .sum::<f64>()
            + sprung.mass * (sprung_com - com).norm_squared();
        let r = params.tire_radius;
        let wheel_inertia = std::array::from_fn(|i| 0.5 * params.corners[i].wheel_mass * r * r);
        let brake_capacity = std::array::from_fn(|i| {
            brake_torque(
                params.corners[i].sprung_mass,
                params.braking_distance,
                params.brake_disk_radius,
                1.0,
            )
        });
        let dimensions = Vector3::from(params.body_dimensions);
        Ok(Vehicle {
            params,
            long,
            lat,
            suspension,
            mass,
            yaw_inertia,
            wheel_inertia,
            brake_capacity,
            com,
            arms,
            dimensions,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn yaw_inertia(&self) -> f64 {
        self.yaw_inertia
    }

    pub fn wheel_inertia(&self) -> [f64; 4] {
        self.wheel_inertia
    }

    pub fn tire_splines(&self) -> (&TireSpline, &TireSpline) {
        (&self.long, &self.lat)
    }

    /// Bounding box of the body at `pose`.
    pub fn body_box(&self, pose: &Pose) -> OrientedBox {
        OrientedBox::from_pose(pose, &self.dimensions)
    }

    /// Vehicle standing still in first gear at exact static equilibrium.
    pub fn at_rest(&self, x: f64, y: f64, heading: f64) -> VehicleState {
        let k_t = self.params.tire_stiffness;
        let mut wheel = [0.0; 4];
        let mut body = [0.0; 4];
        for i in 0..4 {
            let c = &self.params.corners[i];
            wheel[i] = -(c.sprung_mass + c.wheel_mass) * GRAVITY / k_t;
            body[i] = wheel[i] - c.sprung_mass * GRAVITY / self.suspension[i].stiffness;
        }
        let mut state = VehicleState {
            time: 0.0,
            pose: Pose::identity(),
            heading,
            velocity: 0.0,
            lateral_velocity: 0.0,
            angular_velocity: [0.0; 3],
            wheel_speed: [0.0; 4],
            wheel_deflection: wheel,
            wheel_deflection_rate: [0.0; 4],
            body_deflection: body,
            body_deflection_rate: [0.0; 4],
            wheel_revolutions: [0.0; 4],
            engine_rpm: self.params.idle_rpm,
            gear: 1,
            steering_angle: 0.0,
            output_torque: 0.0,
            throttle_state: 0.0,
        };
        let com = Vector2::new(x, y) + rot2(heading) * self.com;
        state.pose = self.body_pose(com, heading, &body);
        state
    }

    /// Like [`Vehicle::at_rest`] but rolling straight ahead at `speed` in
    /// the gear the shifter would settle in.
    pub fn with_speed(&self, x: f64, y: f64, heading: f64, speed: f64) -> VehicleState {
        let mut state = self.at_rest(x, y, heading);
        let w = speed / self.params.tire_radius;
        state.velocity = speed;
        state.wheel_speed = [w; 4];
        let wheel_rpm = rad_s_to_rpm(w).abs();
        let p = &self.params;
        let mut gear = 1;
        while gear < p.top_gear()
            && super::powertrain::engine_target_rpm(wheel_rpm, gear, p) > p.shift_up_rpm
        {
            gear += 1;
        }
        state.gear = gear;
        state.engine_rpm = super::powertrain::engine_target_rpm(wheel_rpm, gear, p);
        state
    }

    fn body_pose(&self, com: Vector2<f64>, heading: f64, body: &[f64; 4]) -> Pose {
        let l = self.params.wheelbase;
        let w = self.params.track_width;
        let front = 0.5 * (body[0] + body[1]);
        let rear = 0.5 * (body[2] + body[3]);
        let left = 0.5 * (body[0] + body[2]);
        let right = 0.5 * (body[1] + body[3]);
        let pitch = ((rear - front) / l).atan();
        let roll = ((left - right) / w).atan();
        let z = self.params.ride_height + body.iter().sum::<f64>() / 4.0;
        let origin = com - rot2(heading) * self.com;
        let r = Rotation3::from_euler_angles(roll, pitch, heading);
        pose_from_parts(r.matrix(), &Vector3::new(origin.x, origin.y, z))
    }

    fn roll_pitch(&self, body: &[f64; 4]) -> (f64, f64) {
        let front = 0.5 * (body[0] + body[1]);
        let rear = 0.5 * (body[2] + body[3]);
        let left = 0.5 * (body[0] + body[2]);
        let right = 0.5 * (body[1] + body[3]);
        (
            ((left - right) / self.params.track_width).atan(),
            ((rear - front) / self.params.wheelbase).atan(),
        )
    }

    /// Advances the vehicle by one tick.
    pub fn step(
        &self,
        state: &VehicleState,
        input: &ControlInput,
        scene: &Scene,
        conditions: &Conditions,
        dt: f64,
    ) -> Result<VehicleState> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        let p = &self.params;
        let mut next = state.clone();
        next.time = state.time + dt;
        let throttle = input.throttle.clamp(0.0, 1.0);
        let brake = input.brake.clamp(0.0, 1.0);
        let v = state.velocity;

        next.steering_angle = apply_steering(state.steering_angle, input.steering, v, p, dt);
        let (delta_l, delta_r) = ackermann_angles(next.steering_angle, p.wheelbase, p.track_width);
        let steer = [delta_l, delta_r, 0.0, 0.0];

        if v.abs() < GEAR_CHANGE_SPEED {
            if input.reverse && state.gear != -1 {
                next.gear = -1;
            } else if !input.reverse && state.gear == -1 {
                next.gear = 1;
            }
        }
        let (rpm, gear) = update_engine_state(state.engine_rpm, next.gear, state.mean_abs_wheel_rpm(), p, dt);
        next.engine_rpm = rpm;
        next.gear = gear;

        next.throttle_state = smooth_throttle(state.throttle_state, throttle, dt);
        let total = powertrain_torque(next.throttle_state, next.engine_rpm, next.gear, p);
        if !total.is_finite() {
            return Err(Error::Diverged { submodel: "powertrain", time: next.time });
        }
        next.output_torque = total;
        let drive = wheel_drive_torques(total, next.steering_angle, p);

        let mut brake_cmd = [brake; 4];
        if input.handbrake {
            brake_cmd[2] = 1.0;
            brake_cmd[3] = 1.0;
        }
        let brake_torques: [f64; 4] = std::array::from_fn(|i| brake_cmd[i] * self.brake_capacity[i]);

        let load = self.vertical_step(state, &mut next, dt)?;

        let case = aero_case(v, total, next.gear, state.mean_wheel_rpm(), p);
        let inputs = PlanarInputs {
            steer,
            load,
            drive,
            brake: brake_torques,
            brake_dir: state.wheel_speed.map(sign),
            traction: conditions.traction_scale,
            drag: aero_drag_magnitude(case, p),
        };
        let u = self.planar_solve(state, inputs, dt, next.time)?;

        next.wheel_speed = [u[0], u[1], u[2], u[3]];
        next.velocity = u[4];
        // Sliding friction on locked wheels only opposes motion; the
        // linearised solve can overshoot zero on the tick the car stops.
        if next.wheel_speed.iter().all(|&w| w == 0.0) && next.velocity * state.velocity < 0.0 {
            next.velocity = 0.0;
        }
        next.lateral_velocity = u[5];
        let yaw_rate = u[6];
        next.heading = state.heading + yaw_rate * dt;

        let com_prev = Vector2::new(state.pose[(0, 3)], state.pose[(1, 3)]) + rot2(state.heading) * self.com;
        let com = com_prev + rot2(next.heading) * Vector2::new(next.velocity, next.lateral_velocity) * dt;
        next.pose = self.body_pose(com, next.heading, &next.body_deflection);

        let (roll0, pitch0) = self.roll_pitch(&state.body_deflection);
        let (roll1, pitch1) = self.roll_pitch(&next.body_deflection);
        next.angular_velocity = [(roll1 - roll0) / dt, (pitch1 - pitch0) / dt, yaw_rate];

        for i in 0..4 {
            next.wheel_revolutions[i] += next.wheel_speed[i] * dt / std::f64::consts::TAU;
        }

        // Inelastic impact: the body keeps its overlapping pose and stops.
        let ego = self.body_box(&next.pose);
        if scene
            .solid_obstacles()
            .filter_map(|o| o.oriented_box())
            .any(|b| ego.overlaps(&b))
        {
            next.velocity = 0.0;
            next.lateral_velocity = 0.0;
            next.angular_velocity[2] = 0.0;
            next.wheel_speed = [0.0; 4];
        }
        Ok(next)
    }

    /// Advances corner heave and returns the tire normal loads.
    fn vertical_step(&self, state: &VehicleState, next: &mut VehicleState, dt: f64) -> Result<[f64; 4]> {
        let k_t = self.params.tire_stiffness;
        let mut load = [0.0; 4];
        for i in 0..4 {
            let c = &self.params.corners[i];
            let (k, b) = (self.suspension[i].stiffness, self.suspension[i].damping);
            let (big_m, m) = (c.sprung_mass, c.wheel_mass);
            let contact = if state.wheel_deflection[i] < 0.0 { k_t } else { 0.0 };
            // Accelerations are affine in x = [Z, z] and v = [Ż, ż]:
            // a = A·x + C·v + g.
            let a = Matrix2::new(-k / big_m, k / big_m, k / m, -(k + contact) / m);
            let cm = Matrix2::new(-b / big_m, b / big_m, b / m, -b / m);
            let g = Vector2::new(-GRAVITY, -GRAVITY);
            let x = Vector2::new(state.body_deflection[i], state.wheel_deflection[i]);
            let vel = Vector2::new(state.body_deflection_rate[i], state.wheel_deflection_rate[i]);
            let lhs = Matrix2::identity() - cm * dt - a * (dt * dt);
            let rhs = vel + (a * x + g) * dt;
            let v_new = lhs
                .lu()
                .solve(&rhs)
                .filter(|v| v.iter().all(|x| x.is_finite()))
                .ok_or(Error::Diverged { submodel: "suspension", time: next.time })?;
            let x_new = x + v_new * dt;
            next.body_deflection[i] = x_new[0];
            next.wheel_deflection[i] = x_new[1];
            next.body_deflection_rate[i] = v_new[0];
            next.wheel_deflection_rate[i] = v_new[1];
            load[i] = k_t * (-x_new[1]).max(0.0);
        }
        Ok(load)
    }

    /// Rates of `[ω0..ω3, vx, vy, r]`, plus the longitudinal tire forces.
    fn planar_rates(&self, u: &Vec7, inp: &PlanarInputs) -> (Vec7, [f64; 4]) {
        let r_tire = self.params.tire_radius;
        let (vx, vy, r) = (u[4], u[5], u[6]);
        let mut out = Vec7::zeros();
        let mut f_long = [0.0; 4];
        let (mut fx, mut fy, mut mz) = (0.0, 0.0, 0.0);
        for i in 0..4 {
            let arm = self.arms[i];
            let cvx = vx - r * arm.y;
            let cvy = vy + r * arm.x;
            let (s, c) = inp.steer[i].sin_cos();
            let u_long = c * cvx + s * cvy;
            let u_lat = -s * cvx + c * cvy;
            let denom = u_long.abs().max(SLIP_SPEED_FLOOR);
            let slip = (u[i] * r_tire - u_long) / denom;
            let alpha = u_lat.atan2(denom);
            let fl = tire_force(&self.long, slip, inp.load[i], inp.traction);
            let ft = -tire_force(&self.lat, alpha, inp.load[i], inp.traction);
            f_long[i] = fl;
            let bx = c * fl - s * ft;
            let by = s * fl + c * ft;
            fx += bx;
            fy += by;
            mz += arm.x * by - arm.y * bx;
            out[i] = (inp.drive[i] - inp.brake_dir[i] * inp.brake[i] - r_tire * fl) / self.wheel_inertia[i];
        }
        let drag = -(vx / DRAG_RAMP_SPEED).clamp(-1.0, 1.0) * inp.drag;
        out[4] = (fx + drag) / self.mass + r * vy;
        out[5] = fy / self.mass - r * vx;
        out[6] = mz / self.yaw_inertia;
        (out, f_long)
    }

    fn planar_solve(&self, state: &VehicleState, mut inp: PlanarInputs, dt: f64, time: f64) -> Result<Vec7> {
        let w = state.wheel_speed;
        let u0 = Vec7::from_column_slice(&[
            w[0],
            w[1],
            w[2],
            w[3],
            state.velocity,
            state.lateral_velocity,
            state.angular_velocity[2],
        ]);
        let mut locked: [bool; 4] = std::array::from_fn(|i| inp.brake[i] > 0.0 && w[i] == 0.0);
        let mut u_new = u0;
        for _ in 0..4 {
            let (f0, _) = self.planar_rates(&u0, &inp);
            if f0.iter().any(|x| !x.is_finite()) {
                return Err(Error::Diverged { submodel: "tire", time });
            }
            let mut jac = Mat7::zeros();
            for j in 0..7 {
                let h = 1e-6 * u0[j].abs().max(1.0);
                let mut up = u0;
                up[j] += h;
                let (fj, _) = self.planar_rates(&up, &inp);
                jac.set_column(j, &((fj - f0) / h));
            }
            let mut lhs = Mat7::identity() - jac * dt;
            let mut rhs = f0 * dt;
            for i in 0..4 {
                if locked[i] {
                    lhs.set_row(i, &Mat7::identity().row(i));
                    rhs[i] = -u0[i];
                }
            }
            let delta = lhs
                .lu()
                .solve(&rhs)
                .filter(|d| d.iter().all(|x| x.is_finite()))
                .ok_or(Error::Diverged { submodel: "integrator", time })?;
            u_new = u0 + delta;
            for i in 0..4 {
                if locked[i] {
                    u_new[i] = 0.0;
                }
            }

            let (_, f_long) = self.planar_rates(&u_new, &inp);
            let mut changed = false;
            for i in 0..4 {
                if inp.brake[i] <= 0.0 {
                    continue;
                }
                if locked[i] {
                    // Torque the brake must supply to hold the wheel.
                    let hold = inp.drive[i] - self.params.tire_radius * f_long[i]
                        + self.wheel_inertia[i] * u0[i] / dt;
                    if hold.abs() > inp.brake[i] {
                        locked[i] = false;
                        inp.brake_dir[i] = sign(hold);
                        changed = true;
                    }
                } else if u_new[i] * inp.brake_dir[i] < 0.0 || inp.brake_dir[i] == 0.0 {
                    locked[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(u_new)
    }
}

fn rot2(angle: f64) -> nalgebra::Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
