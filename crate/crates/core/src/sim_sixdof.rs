//! Six-degree-of-freedom quadrotor with a cascaded PD controller closing
//! the loop around the guidance law.
//!
//! Per step: measure bearings, issue the guidance command, integrate the
//! desired position, run the position and attitude controllers, then
//! advance the rigid body with RK4 holding the inputs constant.

use nalgebra::Matrix3;
use rand_chacha::ChaCha8Rng;

use crate::experiments::noise::{corrupt_bearings, noise_rng, NoiseConfig};
use crate::geometry::{bearing_angles, Vec3, WindowSpec};
use crate::guidance::{desired_position, guidance_step, GuidanceConfig};
use crate::run::{make_traversal, plane_crossing, Recorder, RunResult, RunStatus};
use crate::sim_kinematic::SimError;

pub const DEFAULT_DT: f64 = 0.002;

/// Commanded roll and pitch limit, rad (20 deg).
pub const DEFAULT_TILT_LIMIT: f64 = 20.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadParams {
    pub mass: f64,
    pub jxx: f64,
    pub jyy: f64,
    pub jzz: f64,
    pub gravity: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            mass: 0.47,
            jxx: 0.0086,
            jyy: 0.0086,
            jzz: 0.0176,
            gravity: 9.81,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = [self.mass, self.jxx, self.jyy, self.jzz, self.gravity];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(SimError::InvalidScenario(
                "mass, inertias and gravity must be strictly positive".into(),
            ))
        }
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub pos: Vec3,
    pub vel: Vec3,
    /// Roll, pitch, yaw.
    pub att: Vec3,
    /// Body rates `(p, q, r)`.
    pub body_rates: Vec3,
    pub t: f64,
}

impl RigidBodyState {
    /// At rest, level, at `pos`.
    pub fn at_rest(pos: Vec3) -> Self {
        Self {
            pos,
            vel: Vec3::zeros(),
            att: Vec3::zeros(),
            body_rates: Vec3::zeros(),
            t: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        [self.pos, self.vel, self.att, self.body_rates]
            .iter()
            .all(|v| v.iter().all(|c| c.is_finite()))
    }
}

/// Time derivative of [`RigidBodyState`] (excluding time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub pos: Vec3,
    pub vel: Vec3,
    pub att: Vec3,
    pub body_rates: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInputs {
    /// Total thrust, N.
    pub u1: f64,
    /// Roll, pitch, yaw moments, N m.
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    pub kp_z: f64,
    pub kd_z: f64,
    pub kp_x: f64,
    pub kd_x: f64,
    pub kp_y: f64,
    pub kd_y: f64,
    pub kp_jx: f64,
    pub kd_jx: f64,
    pub kp_jy: f64,
    pub kd_jy: f64,
    pub kp_phi: f64,
    pub kd_phi: f64,
    pub kp_theta: f64,
    pub kd_theta: f64,
    pub kp_psi: f64,
    pub kd_psi: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp_z: 3.8,
            kd_z: 3.5,
            kp_x: 6.0,
            kd_x: 3.5,
            kp_y: 12.7,
            kd_y: 4.2,
            kp_jx: 6.0,
            kd_jx: 3.5,
            kp_jy: 12.7,
            kd_jy: 4.2,
            kp_phi: 12.8,
            kd_phi: 0.5,
            kp_theta: 1.8,
            kd_theta: 0.2,
            kp_psi: 2.0,
            kd_psi: 0.5,
        }
    }
}

impl ControllerGains {
    pub fn zero() -> Self {
        Self {
            kp_z: 0.0,
            kd_z: 0.0,
            kp_x: 0.0,
            kd_x: 0.0,
            kp_y: 0.0,
            kd_y: 0.0,
            kp_jx: 0.0,
            kd_jx: 0.0,
            kp_jy: 0.0,
            kd_jy: 0.0,
            kp_phi: 0.0,
            kd_phi: 0.0,
            kp_theta: 0.0,
            kd_theta: 0.0,
            kp_psi: 0.0,
            kd_psi: 0.0,
        }
    }

    fn as_array(&self) -> [f64; 16] {
        [
            self.kp_z,
            self.kd_z,
            self.kp_x,
            self.kd_x,
            self.kp_y,
            self.kd_y,
            self.kp_jx,
            self.kd_jx,
            self.kp_jy,
            self.kd_jy,
            self.kp_phi,
            self.kd_phi,
            self.kp_theta,
            self.kd_theta,
            self.kp_psi,
            self.kd_psi,
        ]
    }

    /// All gains finite and non-negative. Zero gains are accepted so that
    /// loss-of-control runs can be simulated.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.as_array().iter().all(|g| g.is_finite() && *g >= 0.0) {
            Ok(())
        } else {
            Err(SimError::InvalidScenario(
                "controller gains must be finite and non-negative".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttitudeCommand {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Commanded body rates `(p_c, q_c, r_c)`.
    pub rates: Vec3,
}

/// Matrix taking Euler-angle rates to body rates.
pub fn euler_rate_matrix(att: &Vec3) -> Matrix3<f64> {
    let (sphi, cphi) = att.x.sin_cos();
    let (sth, cth) = att.y.sin_cos();
    Matrix3::new(
        1.0,
        0.0,
        -sth, //
        0.0,
        cphi,
        sphi * cth, //
        0.0,
        -sphi,
        cphi * cth,
    )
}

pub fn euler_rates_to_body(att: &Vec3, euler_rates: &Vec3) -> Vec3 {
    euler_rate_matrix(att) * euler_rates
}

/// Inverse of [`euler_rates_to_body`]; singular at `|theta| = π/2`.
pub fn body_to_euler_rates(att: &Vec3, body_rates: &Vec3) -> Result<Vec3, SimError> {
    let (sphi, cphi) = att.x.sin_cos();
    let (sth, cth) = att.y.sin_cos();
    if cth.abs() < 1e-9 {
        return Err(SimError::InvalidScenario(format!(
            "gimbal singularity at pitch {:.6} rad",
            att.y
        )));
    }
    let (p, q, r) = (body_rates.x, body_rates.y, body_rates.z);
    let psi_dot = (sphi * q + cphi * r) / cth;
    Ok(Vec3::new(p + sth * psi_dot, cphi * q - sphi * r, psi_dot))
}

/// Rigid-body equations of motion. Attitude accelerations are the moments
/// over the principal inertias; body-rate derivatives follow from
/// differentiating the Euler-rate map.
pub fn dynamics_deriv(
    state: &RigidBodyState,
    u: &ControlInputs,
    params: &QuadParams,
) -> Result<StateDerivative, SimError> {
    let (phi, theta, psi) = (state.att.x, state.att.y, state.att.z);
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();

    let thrust = u.u1 / params.mass;
    let acc = Vec3::new(
        thrust * (cphi * sth * cpsi + sphi * spsi),
        thrust * (cphi * sth * spsi - sphi * cpsi),
        thrust * cphi * cth - params.gravity,
    );

    let eta_dot = body_to_euler_rates(&state.att, &state.body_rates)?;
    let eta_ddot = Vec3::new(u.u2 / params.jxx, u.u3 / params.jyy, u.u4 / params.jzz);
    let (phid, thd) = (eta_dot.x, eta_dot.y);
    let m_dot = Matrix3::new(
        0.0,
        0.0,
        -cth * thd, //
        0.0,
        -sphi * phid,
        cphi * cth * phid - sphi * sth * thd, //
        0.0,
        -cphi * phid,
        -sphi * cth * phid - cphi * sth * thd,
    );
    let body_rates = m_dot * eta_dot + euler_rate_matrix(&state.att) * eta_ddot;

    Ok(StateDerivative {
        pos: state.vel,
        vel: acc,
        att: eta_dot,
        body_rates,
    })
}

fn advance(s: &RigidBodyState, d: &StateDerivative, h: f64) -> RigidBodyState {
    RigidBodyState {
        pos: s.pos + d.pos * h,
        vel: s.vel + d.vel * h,
        att: s.att + d.att * h,
        body_rates: s.body_rates + d.body_rates * h,
        t: s.t + h,
    }
}

/// One RK4 step with the inputs held constant.
pub fn rk4_step(
    state: &RigidBodyState,
    u: &ControlInputs,
    params: &QuadParams,
    dt: f64,
) -> Result<RigidBodyState, SimError> {
    let k1 = dynamics_deriv(state, u, params)?;
    let k2 = dynamics_deriv(&advance(state, &k1, dt / 2.0), u, params)?;
    let k3 = dynamics_deriv(&advance(state, &k2, dt / 2.0), u, params)?;
    let k4 = dynamics_deriv(&advance(state, &k3, dt), u, params)?;
    let sum = |f: fn(&StateDerivative) -> Vec3| (f(&k1) + 2.0 * f(&k2) + 2.0 * f(&k3) + f(&k4)) * (dt / 6.0);
    Ok(RigidBodyState {
        pos: state.pos + sum(|k| k.pos),
        vel: state.vel + sum(|k| k.vel),
        att: state.att + sum(|k| k.att),
        body_rates: state.body_rates + sum(|k| k.body_rates),
        t: state.t + dt,
    })
}

/// Desired position and velocity from the guidance loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredMotion {
    pub pos: Vec3,
    pub vel: Vec3,
}

/// Outer loop: altitude PD on thrust, horizontal PD to a desired
/// acceleration inverted through the small-angle attitude map, tilt
/// saturation, and commanded body rates from the backward difference of
/// the commanded attitude.
#[derive(Debug, Clone)]
pub struct PositionController {
    pub gains: ControllerGains,
    pub params: QuadParams,
    pub tilt_limit: f64,
    pub dt: f64,
    prev: Option<Vec3>,
}

impl PositionController {
    pub fn new(gains: ControllerGains, params: QuadParams, tilt_limit: f64, dt: f64) -> Self {
        Self {
            gains,
            params,
            tilt_limit,
            dt,
            prev: None,
        }
    }

    pub fn update(&mut self, desired: &DesiredMotion, state: &RigidBodyState) -> (f64, AttitudeCommand) {
        let g = &self.gains;
        let m = self.params.mass;
        let grav = self.params.gravity;
        let u1 =
            (m * (grav + g.kd_z * (desired.vel.z - state.vel.z) + g.kp_z * (desired.pos.z - state.pos.z))).max(0.0);

        let ax = g.kd_jx * (desired.vel.x - state.vel.x) + g.kp_jx * (desired.pos.x - state.pos.x);
        let ay = g.kd_jy * (desired.vel.y - state.vel.y) + g.kp_jy * (desired.pos.y - state.pos.y);
        let yaw_cmd = 0.0;
        let (spsi, cpsi) = state.att.z.sin_cos();
        let lim = self.tilt_limit;
        let pitch = ((ax * cpsi + ay * spsi) / grav).clamp(-lim, lim);
        let roll = ((ax * spsi - ay * cpsi) / grav).clamp(-lim, lim);

        let cmd_att = Vec3::new(roll, pitch, yaw_cmd);
        let cmd_rate = match self.prev {
            Some(prev) => (cmd_att - prev) / self.dt,
            None => Vec3::zeros(),
        };
        self.prev = Some(cmd_att);
        let rates = euler_rates_to_body(&cmd_att, &cmd_rate);
        (
            u1,
            AttitudeCommand {
                roll,
                pitch,
                yaw: yaw_cmd,
                rates,
            },
        )
    }
}

/// Inner loop: PD on attitude and body-rate errors.
pub fn attitude_controller(cmd: &AttitudeCommand, state: &RigidBodyState, gains: &ControllerGains) -> (f64, f64, f64) {
    let rate_err = cmd.rates - state.body_rates;
    let u2 = gains.kd_phi * rate_err.x + gains.kp_phi * (cmd.roll - state.att.x);
    let u3 = gains.kd_theta * rate_err.y + gains.kp_theta * (cmd.pitch - state.att.y);
    let u4 = gains.kd_psi * rate_err.z + gains.kp_psi * (cmd.yaw - state.att.z);
    (u2, u3, u4)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixDofConfig {
    pub dt: f64,
    pub t_max: f64,
    pub tilt_limit: f64,
    /// Attitude magnitude treated as loss of control, rad.
    pub max_tilt: f64,
    /// Distance from the desired position treated as loss of control, m.
    pub max_tracking_error: f64,
    pub record_trace: bool,
}

impl Default for SixDofConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_max: 200.0,
            tilt_limit: DEFAULT_TILT_LIMIT,
            max_tilt: 1.2,
            max_tracking_error: 10.0,
            record_trace: true,
        }
    }
}

/// Closed-loop run from `start` until the window plane is crossed, time
/// runs out, or control is lost.
#[allow(clippy::too_many_arguments)]
pub fn run_sixdof(
    start: &RigidBodyState,
    window: &WindowSpec,
    cfg: &GuidanceConfig,
    gains: &ControllerGains,
    params: &QuadParams,
    sim: &SixDofConfig,
    noise: Option<&NoiseConfig>,
) -> Result<RunResult, SimError> {
    cfg.validate()?;
    gains.validate()?;
    params.validate()?;
    if !(sim.dt > 0.0 && sim.t_max > 0.0 && sim.tilt_limit > 0.0) {
        return Err(SimError::InvalidScenario(
            "dt, t_max and tilt limit must be positive".into(),
        ));
    }
    if start.pos.y >= window.plane_y() {
        return Err(SimError::InvalidScenario("start must be on the approach side".into()));
    }
    let mut rng: Option<(ChaCha8Rng, NoiseConfig)> = match noise {
        Some(n) if n.sigma > 0.0 => Some((noise_rng(n), *n)),
        Some(n) if n.sigma < 0.0 || !n.sigma.is_finite() => {
            return Err(SimError::InvalidScenario("noise sigma must be non-negative".into()))
        }
        _ => None,
    };

    let mut rec = Recorder::new(sim.record_trace);
    let mut ctrl = PositionController::new(*gains, *params, sim.tilt_limit, sim.dt);
    let mut state = RigidBodyState { t: 0.0, ..*start };
    let mut desired = DesiredMotion {
        pos: start.pos,
        vel: Vec3::zeros(),
    };
    let mut latched = false;
    let mut step: u64 = 0;

    loop {
        let truth = bearing_angles(&state.pos, window)?;
        let measured = match rng.as_mut() {
            Some((r, n)) => corrupt_bearings(&truth, n, r),
            None => truth,
        };
        let cmd = guidance_step(Some(&measured), cfg, latched)?;
        latched = cmd.traversal_latched;
        desired.vel = cmd.v_des;

        let sample = rec.sample(state.t, &state.pos, &state.vel, &state.att, &cmd, cfg.speed, window)?;
        let tracking_error = (desired.pos - state.pos).norm();
        rec.note_tracking_error(tracking_error);

        if tracking_error > sim.max_tracking_error {
            let msg = format!(
                "tracking error {tracking_error:.3} m exceeds {} m at t = {:.3} s",
                sim.max_tracking_error, state.t
            );
            return Ok(rec.finish(RunStatus::Diverged(msg), None));
        }
        if state.t >= sim.t_max {
            return Ok(rec.finish(RunStatus::TimedOut, None));
        }

        let (u1, att_cmd) = ctrl.update(&desired, &state);
        rec.note_commanded_tilt(att_cmd.roll, att_cmd.pitch);
        let (u2, u3, u4) = attitude_controller(&att_cmd, &state, gains);
        let u = ControlInputs { u1, u2, u3, u4 };

        let mut next = match rk4_step(&state, &u, params, sim.dt) {
            Ok(n) => n,
            Err(e) => return Ok(rec.finish(RunStatus::Diverged(e.to_string()), None)),
        };
        step += 1;
        next.t = step as f64 * sim.dt;
        desired.pos = desired_position(&desired.pos, &cmd.v_des, sim.dt);

        if !next.is_finite() {
            return Ok(rec.finish(
                RunStatus::Diverged(format!("non-finite state at t = {:.3} s", next.t)),
                None,
            ));
        }
        if next.att.x.abs() > sim.max_tilt || next.att.y.abs() > sim.max_tilt {
            let msg = format!(
                "attitude ({:.3}, {:.3}) rad exceeds {} rad at t = {:.3} s",
                next.att.x, next.att.y, sim.max_tilt, next.t
            );
            return Ok(rec.finish(RunStatus::Diverged(msg), None));
        }
        if next.pos.y >= window.plane_y() {
            let (point, time) = plane_crossing(window, &state.pos, &next.pos, state.t, sim.dt);
            let tr = make_traversal(window, point, time, latched, &sample);
            return Ok(rec.finish(RunStatus::Traversed, Some(tr)));
        }
        state = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn hover_is_equilibrium() {
        let p = QuadParams::default();
        let s = RigidBodyState::at_rest(Vec3::new(1.0, 2.0, 3.0));
        let u = ControlInputs {
            u1: p.hover_thrust(),
            ..Default::default()
        };
        assert_abs_diff_eq!(u.u1, 4.6107, epsilon = 1e-12);
        let d = dynamics_deriv(&s, &u, &p).unwrap();
        for v in [d.pos, d.vel, d.att, d.body_rates] {
            assert_abs_diff_eq!(v, Vec3::zeros(), epsilon = 1e-12);
        }
    }

    #[test]
    fn level_attitude_rates_are_identity() {
        let rates = Vec3::new(0.3, -0.2, 0.7);
        assert_eq!(euler_rates_to_body(&Vec3::zeros(), &rates), rates);
        assert_eq!(body_to_euler_rates(&Vec3::zeros(), &rates).unwrap(), rates);
    }

    #[test]
    fn free_fall_without_thrust() {
        let p = QuadParams::default();
        let mut s = RigidBodyState::at_rest(Vec3::zeros());
        s.att = Vec3::new(0.4, -0.3, 1.0);
        let d = dynamics_deriv(&s, &ControlInputs::default(), &p).unwrap();
        assert_abs_diff_eq!(d.vel, Vec3::new(0.0, 0.0, -9.81), epsilon = 1e-15);
    }

    #[test]
    fn gimbal_singularity() {
        let p = QuadParams::default();
        let mut s = RigidBodyState::at_rest(Vec3::zeros());
        s.att.y = FRAC_PI_2;
        assert!(dynamics_deriv(&s, &ControlInputs::default(), &p).is_err());
    }

    #[test]
    fn position_controller_examples() {
        let gains = ControllerGains::default();
        let params = QuadParams::default();
        let mut ctrl = PositionController::new(gains, params, DEFAULT_TILT_LIMIT, DEFAULT_DT);
        let s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 5.0));
        let (u1, att) = ctrl.update(
            &DesiredMotion {
                pos: s.pos,
                vel: Vec3::zeros(),
            },
            &s,
        );
        assert_abs_diff_eq!(u1, params.hover_thrust(), epsilon = 1e-12);
        assert_eq!((att.roll, att.pitch), (0.0, 0.0));

        let mut ctrl = PositionController::new(gains, params, DEFAULT_TILT_LIMIT, DEFAULT_DT);
        let (u1, _) = ctrl.update(
            &DesiredMotion {
                pos: s.pos + Vec3::z(),
                vel: Vec3::zeros(),
            },
            &s,
        );
        assert_abs_diff_eq!(u1, 6.3967, epsilon = 1e-12);

        let mut ctrl = PositionController::new(gains, params, DEFAULT_TILT_LIMIT, DEFAULT_DT);
        let (_, att) = ctrl.update(
            &DesiredMotion {
                pos: s.pos + Vec3::new(50.0, -50.0, 0.0),
                vel: Vec3::zeros(),
            },
            &s,
        );
        assert_eq!(att.pitch, DEFAULT_TILT_LIMIT);
        assert_eq!(att.roll, DEFAULT_TILT_LIMIT);
        assert_abs_diff_eq!(att.pitch, 0.349066, epsilon = 1e-6);
        // first call has no history, so no rate feed-forward
        assert_eq!(att.rates, Vec3::zeros());
    }

    #[test]
    fn attitude_controller_examples() {
        let gains = ControllerGains::default();
        let s = RigidBodyState::at_rest(Vec3::zeros());
        assert_eq!(
            attitude_controller(&AttitudeCommand::default(), &s, &gains),
            (0.0, 0.0, 0.0)
        );
        let cmd = AttitudeCommand {
            roll: 0.1,
            ..Default::default()
        };
        let (u2, _, _) = attitude_controller(&cmd, &s, &gains);
        assert_abs_diff_eq!(u2, 1.28, epsilon = 1e-12);
        let mut s2 = s;
        s2.att.z = 0.05;
        let (_, _, u4) = attitude_controller(&AttitudeCommand::default(), &s2, &gains);
        assert_abs_diff_eq!(u4, -0.1, epsilon = 1e-12);
    }

    #[test]
    fn zero_gains_lose_track() {
        let w = WindowSpec::reference();
        let run = run_sixdof(
            &RigidBodyState::at_rest(Vec3::zeros()),
            &w,
            &GuidanceConfig::default(),
            &ControllerGains::zero(),
            &QuadParams::default(),
            &SixDofConfig {
                record_trace: false,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert!(matches!(run.status, RunStatus::Diverged(_)), "{:?}", run.status);
    }
}
