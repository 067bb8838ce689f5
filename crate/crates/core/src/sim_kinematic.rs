//! Point-mass model flying the commanded angles exactly.
//!
//! This is the ideal-tracking baseline: speed is always the commanded
//! speed and the direction is re-evaluated from the bearings at every RK4
//! stage.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{bearing_angles, GeometryError, Vec3, WindowSpec};
use crate::guidance::{guidance_step, GuidanceCommand, GuidanceConfig, GuidanceError};
use crate::run::{make_traversal, plane_crossing, Recorder, RunResult, RunStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub const DEFAULT_DT: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub pos: Vec3,
    pub t: f64,
}

/// Guidance command at `pos`. Stage points that overshoot the plane are
/// evaluated on the plane itself.
fn command_at(
    pos: &Vec3,
    window: &WindowSpec,
    cfg: &GuidanceConfig,
    latched: bool,
) -> Result<GuidanceCommand, SimError> {
    if latched {
        return Ok(guidance_step(None, cfg, true)?);
    }
    let mut p = *pos;
    p.y = p.y.min(window.plane_y());
    let b = bearing_angles(&p, window)?;
    Ok(guidance_step(Some(&b), cfg, false)?)
}

/// Advances the point mass by one RK4 step of length `dt`.
pub fn kinematic_step(
    state: &KinematicState,
    window: &WindowSpec,
    cfg: &GuidanceConfig,
    latched: bool,
    dt: f64,
) -> Result<KinematicState, SimError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(SimError::InvalidScenario(format!("dt must be positive, got {dt}")));
    }
    let f = |p: &Vec3| command_at(p, window, cfg, latched).map(|c| c.v_des);
    let p = state.pos;
    let k1 = f(&p)?;
    let k2 = f(&(p + k1 * (dt / 2.0)))?;
    let k3 = f(&(p + k2 * (dt / 2.0)))?;
    let k4 = f(&(p + k3 * dt))?;
    Ok(KinematicState {
        pos: p + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0),
        t: state.t + dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicConfig {
    pub dt: f64,
    pub t_max: f64,
    pub record_trace: bool,
}

impl Default for KinematicConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_max: 200.0,
            record_trace: true,
        }
    }
}

/// Flies the point mass from `start` until it crosses the window plane or
/// `t_max` elapses.
pub fn run_kinematic(
    start: &Vec3,
    window: &WindowSpec,
    cfg: &GuidanceConfig,
    sim: &KinematicConfig,
) -> Result<RunResult, SimError> {
    cfg.validate()?;
    if !(sim.dt > 0.0 && sim.t_max > 0.0) {
        return Err(SimError::InvalidScenario("dt and t_max must be positive".into()));
    }
    if start.y > window.plane_y() {
        return Err(SimError::InvalidScenario("start is past the window plane".into()));
    }
    let mut rec = Recorder::new(sim.record_trace);
    let mut state = KinematicState { pos: *start, t: 0.0 };
    let mut latched = false;
    let mut step: u64 = 0;
    loop {
        let b = bearing_angles(&state.pos, window)?;
        let cmd = guidance_step(Some(&b), cfg, latched)?;
        latched = cmd.traversal_latched;
        let sample = rec.sample(state.t, &state.pos, &cmd.v_des, &Vec3::zeros(), &cmd, cfg.speed, window)?;

        if state.pos.y >= window.plane_y() {
            // Started on the plane.
            let tr = make_traversal(window, state.pos, state.t, latched, &sample);
            return Ok(rec.finish(RunStatus::Traversed, Some(tr)));
        }
        if state.t >= sim.t_max {
            return Ok(rec.finish(RunStatus::TimedOut, None));
        }
        let mut next = kinematic_step(&state, window, cfg, latched, sim.dt)?;
        step += 1;
        next.t = step as f64 * sim.dt;
        if next.pos.y >= window.plane_y() {
            let (point, time) = plane_crossing(window, &state.pos, &next.pos, state.t, sim.dt);
            let tr = make_traversal(window, point, time, latched, &sample);
            return Ok(rec.finish(RunStatus::Traversed, Some(tr)));
        }
        state = next;
    }
}

/// Integrates the guided point mass to a fixed horizon without latching or
/// plane-crossing logic. Used for convergence-order studies on segments
/// away from the centroid line.
pub fn integrate_to(
    start: &Vec3,
    window: &WindowSpec,
    cfg: &GuidanceConfig,
    dt: f64,
    horizon: f64,
) -> Result<Vec3, SimError> {
    let steps = (horizon / dt).round() as u64;
    if steps == 0 || ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(SimError::InvalidScenario(
            "horizon must be a positive multiple of dt".into(),
        ));
    }
    let mut state = KinematicState { pos: *start, t: 0.0 };
    for _ in 0..steps {
        state = kinematic_step(&state, window, cfg, false, dt)?;
    }
    Ok(state.pos)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasePlane {
    /// `(alpha_1, alpha_4)`.
    Elevation,
    /// `(beta_1, beta_2)`.
    Azimuth,
}

impl PhasePlane {
    pub fn name(&self) -> &'static str {
        match self {
            PhasePlane::Elevation => "alpha1_alpha4",
            PhasePlane::Azimuth => "beta1_beta2",
        }
    }

    /// Fixed point of the plane for `window`, radians.
    pub fn equilibrium(&self, window: &WindowSpec) -> (f64, f64) {
        match self {
            PhasePlane::Elevation => {
                let a = window.terminal_elevation();
                (a, -a)
            }
            PhasePlane::Azimuth => (PI, 0.0),
        }
    }
}

/// A phase-portrait starting point, either a position or a set of bearings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Position(Vec3),
    /// Radians. `alpha4` must agree with the position implied by the other
    /// three angles to within [`BEARING_CONSISTENCY_TOL`].
    Bearings {
        alpha1: f64,
        alpha4: f64,
        beta1: f64,
        beta2: f64,
    },
}

/// Allowed mismatch between a stated `alpha4` and the one implied by
/// `(alpha1, beta1, beta2)`; covers angles quoted to two decimals of a degree.
pub const BEARING_CONSISTENCY_TOL: f64 = 0.1 * PI / 180.0;

impl InitialCondition {
    /// Resolves the starting position on the approach side.
    pub fn position(&self, window: &WindowSpec) -> Result<Vec3, SimError> {
        match *self {
            InitialCondition::Position(p) => {
                if p.y >= window.plane_y() {
                    return Err(SimError::InvalidScenario(format!(
                        "start ({}, {}, {}) is not on the approach side",
                        p.x, p.y, p.z
                    )));
                }
                bearing_angles(&p, window)?;
                Ok(p)
            }
            InitialCondition::Bearings {
                alpha1,
                alpha4,
                beta1,
                beta2,
            } => {
                let in_open = |b: f64| b > 0.0 && b < PI;
                if !(in_open(beta1) && in_open(beta2) && beta2 < beta1) {
                    return Err(SimError::InvalidScenario(
                        "azimuths must satisfy 0 < beta_2 < beta_1 < π".into(),
                    ));
                }
                let e1 = window.vertex(1);
                let (c1, c2) = (1.0 / beta1.tan(), 1.0 / beta2.tan());
                let depth = window.width() / (c2 - c1);
                let x = e1.x - depth * c1;
                let y = window.plane_y() - depth;
                let r_xy1 = depth / beta1.sin();
                let z = e1.z - r_xy1 * alpha1.tan();
                let p = Vec3::new(x, y, z);
                let b = bearing_angles(&p, window)?;
                if (b.alpha[3] - alpha4).abs() > BEARING_CONSISTENCY_TOL {
                    return Err(SimError::InvalidScenario(format!(
                        "alpha_4 = {:.3} deg is inconsistent with the other bearings (implies {:.3} deg)",
                        alpha4.to_degrees(),
                        b.alpha[3].to_degrees()
                    )));
                }
                Ok(p)
            }
        }
    }
}

/// The starting point quoted for the phase-plane discussion.
pub fn reference_initial_condition() -> InitialCondition {
    InitialCondition::Bearings {
        alpha1: 36.82f64.to_radians(),
        alpha4: 21.96f64.to_radians(),
        beta1: 54.77f64.to_radians(),
        beta2: 38.21f64.to_radians(),
    }
}

/// Eleven starts spread over the elevation and azimuth ranges for the
/// reference window: the quoted bearing start plus ten positions above,
/// below and to either side of the centroid line. Each is far enough back
/// for the bearings to settle before the plane.
pub fn default_initial_conditions() -> Vec<InitialCondition> {
    let mut ics = vec![reference_initial_condition()];
    ics.extend(
        [
            [0.0, 0.0, 0.0],
            [30.0, 0.0, 20.0],
            [0.0, 0.0, 20.0],
            [30.0, 0.0, 0.0],
            [14.0, 0.0, 0.0],
            [14.0, 0.0, 23.0],
            [-5.0, 2.0, 11.5],
            [33.0, 2.0, 11.5],
            [14.0, 8.0, 0.5],
            [9.0, 9.0, 16.0],
        ]
        .into_iter()
        .map(|[x, y, z]| InitialCondition::Position(Vec3::new(x, y, z))),
    );
    ics
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitTrajectory {
    pub id: usize,
    pub start: Vec3,
    /// `(angle_a, angle_b, t)` in radians and seconds.
    pub samples: Vec<(f64, f64, f64)>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePortrait {
    pub plane: PhasePlane,
    pub trajectories: Vec<PortraitTrajectory>,
    pub equilibrium: (f64, f64),
}

/// Runs each initial condition through the kinematic model and projects
/// the bearing history onto `plane`.
pub fn phase_portrait(
    plane: PhasePlane,
    initial_conditions: &[InitialCondition],
    window: &WindowSpec,
    cfg: &GuidanceConfig,
    sim: &KinematicConfig,
) -> Result<PhasePortrait, SimError> {
    if initial_conditions.is_empty() {
        return Err(SimError::InvalidScenario(
            "at least one initial condition is required".into(),
        ));
    }
    let sim = KinematicConfig {
        record_trace: true,
        ..*sim
    };
    let trajectories = initial_conditions
        .iter()
        .enumerate()
        .map(|(id, ic)| {
            let start = ic.position(window)?;
            let run = run_kinematic(&start, window, cfg, &sim)?;
            let samples = run
                .trace
                .iter()
                .map(|s| {
                    let b = &s.bearings;
                    match plane {
                        PhasePlane::Elevation => (b.alpha[0], b.alpha[3], s.t),
                        PhasePlane::Azimuth => (b.beta[0], b.beta[1], s.t),
                    }
                })
                .collect();
            Ok(PortraitTrajectory {
                id,
                start,
                samples,
                status: run.status,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(PhasePortrait {
        plane,
        trajectories,
        equilibrium: plane.equilibrium(window),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn window() -> WindowSpec {
        WindowSpec::reference()
    }

    #[test]
    fn latched_step_moves_along_normal() {
        let cfg = GuidanceConfig::default();
        let s = KinematicState {
            pos: Vec3::new(1.0, 2.0, 3.0),
            t: 0.0,
        };
        let n = kinematic_step(&s, &window(), &cfg, true, 1.0).unwrap();
        assert_abs_diff_eq!(n.pos, Vec3::new(1.0, 3.0, 3.0), epsilon = 1e-15);
        assert_eq!(n.t, 1.0);
    }

    #[test]
    fn on_axis_start_flies_straight() {
        let w = window();
        let start = Vec3::new(14.0, 5.0, 11.5);
        let run = run_kinematic(&start, &w, &GuidanceConfig::default(), &KinematicConfig::default()).unwrap();
        assert!(run.safe());
        // The heading shaping term has infinite slope on the axis, so round-off
        // in the azimuths shows up as ~1e-4 rad of heading jitter. The path
        // itself stays on the axis.
        for s in &run.trace {
            assert_abs_diff_eq!(s.gamma_des, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.chi_des, FRAC_PI_2, epsilon = 1e-3);
            assert_abs_diff_eq!(s.pos.x, 14.0, epsilon = 1e-6);
            assert_abs_diff_eq!(s.pos.z, 11.5, epsilon = 1e-12);
        }
        let tr = run.traversal.unwrap();
        assert!(tr.miss < 1e-6, "miss {}", tr.miss);
        assert_abs_diff_eq!(tr.time, 10.0, epsilon = 1e-6);
    }

    #[test]
    fn start_on_plane_is_single_sample() {
        let w = window();
        let run = run_kinematic(
            &w.centroid(),
            &w,
            &GuidanceConfig::default(),
            &KinematicConfig::default(),
        )
        .unwrap();
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.traversal.unwrap().time, 0.0);
        assert_eq!(run.traversal.unwrap().miss, 0.0);
    }

    #[test]
    fn timeout_is_a_result() {
        let w = window();
        let sim = KinematicConfig {
            t_max: 1.0,
            ..Default::default()
        };
        let run = run_kinematic(&Vec3::zeros(), &w, &GuidanceConfig::default(), &sim).unwrap();
        assert_eq!(run.status, RunStatus::TimedOut);
        assert!(run.traversal.is_none());
    }

    #[test]
    fn reference_bearing_start_resolves() {
        let w = window();
        let p = reference_initial_condition().position(&w).unwrap();
        let b = bearing_angles(&p, &w).unwrap();
        assert_abs_diff_eq!(b.beta[0].to_degrees(), 54.77, epsilon = 1e-9);
        assert_abs_diff_eq!(b.beta[1].to_degrees(), 38.21, epsilon = 1e-9);
        assert_abs_diff_eq!(b.alpha[0].to_degrees(), 36.82, epsilon = 1e-9);
        assert_abs_diff_eq!(b.alpha[3].to_degrees(), 21.96, epsilon = 0.05);
    }

    #[test]
    fn inconsistent_bearings_rejected() {
        let w = window();
        let ic = InitialCondition::Bearings {
            alpha1: 0.3,
            alpha4: 0.3,
            beta1: 1.2,
            beta2: 0.8,
        };
        assert!(matches!(ic.position(&w), Err(SimError::InvalidScenario(_))));
        let ic = InitialCondition::Bearings {
            alpha1: 0.3,
            alpha4: 0.1,
            beta1: 0.8,
            beta2: 1.2,
        };
        assert!(matches!(ic.position(&w), Err(SimError::InvalidScenario(_))));
        let ic = InitialCondition::Position(Vec3::new(1.0, 16.0, 1.0));
        assert!(ic.position(&w).is_err());
    }

    #[test]
    fn single_on_plane_portrait() {
        let w = window();
        let p = phase_portrait(
            PhasePlane::Elevation,
            &[InitialCondition::Position(Vec3::new(14.0, 15.0 - 1e-12, 11.5))],
            &w,
            &GuidanceConfig::default(),
            &KinematicConfig::default(),
        )
        .unwrap();
        assert_eq!(p.trajectories.len(), 1);
        assert_eq!(p.trajectories[0].samples.len(), 1);
        let (a, b, _) = p.trajectories[0].samples[0];
        assert_abs_diff_eq!(a, p.equilibrium.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b, p.equilibrium.1, epsilon = 1e-9);
        assert!(phase_portrait(
            PhasePlane::Azimuth,
            &[],
            &w,
            &GuidanceConfig::default(),
            &KinematicConfig::default()
        )
        .is_err());
    }
}
