//! Run outcome and trace types shared by the kinematic and 6-DOF simulators.

use crate::geometry::{
    displacements_from_los, lines_of_sight, lyapunov, BearingSet, DisplacementState, GeometryError, LyapunovSample,
    Vec3, WindowSpec,
};
use crate::guidance::GuidanceCommand;

/// Distance from the centroid normal line below which the Lyapunov
/// function is no longer required to decrease.
pub const LYAPUNOV_DEADBAND: f64 = 1e-6;

/// One row of a trajectory trace. Attitude fields are zero for the
/// kinematic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub pos: Vec3,
    pub vel: Vec3,
    /// Roll, pitch, yaw.
    pub att: Vec3,
    pub gamma_des: f64,
    pub chi_des: f64,
    pub bearings: BearingSet,
    pub s_gamma: f64,
    pub s_chi: f64,
    pub disp: DisplacementState,
    pub w: f64,
    pub w_dot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    /// The vehicle crossed the window plane.
    Traversed,
    /// `t_max` elapsed before the plane was reached.
    TimedOut,
    Diverged(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Traversed => "traversed",
            RunStatus::TimedOut => "timed_out",
            RunStatus::Diverged(_) => "diverged",
        }
    }
}

/// Plane-crossing event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traversal {
    /// Crossing point interpolated onto the window plane.
    pub point: Vec3,
    pub time: f64,
    /// Distance from `point` to the window centroid.
    pub miss: f64,
    /// Whether `point` lies inside the window opening.
    pub inside: bool,
    /// Whether the terminal command had latched before the crossing.
    pub latched: bool,
    /// True bearings at the last sample on the approach side.
    pub bearings_before: BearingSet,
    /// Velocity at the last sample on the approach side.
    pub velocity_before: Vec3,
}

/// Summary statistics accumulated over every step, available even when the
/// full trace is not recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub samples: usize,
    pub max_abs_roll: f64,
    pub max_abs_pitch: f64,
    pub max_abs_roll_cmd: f64,
    pub max_abs_pitch_cmd: f64,
    pub max_tracking_error: f64,
    /// Guided (unlatched) steps where `W` failed to decrease although
    /// `D > LYAPUNOV_DEADBAND`.
    pub lyapunov_increases: usize,
    /// Samples where `dW/dt >= 0` although `D > LYAPUNOV_DEADBAND`.
    pub lyapunov_rate_violations: usize,
    pub initial_w: f64,
    pub final_w: f64,
}

impl Default for RunStats {
    fn default() -> Self {
        Self {
            samples: 0,
            max_abs_roll: 0.0,
            max_abs_pitch: 0.0,
            max_abs_roll_cmd: 0.0,
            max_abs_pitch_cmd: 0.0,
            max_tracking_error: 0.0,
            lyapunov_increases: 0,
            lyapunov_rate_violations: 0,
            initial_w: f64::NAN,
            final_w: f64::NAN,
        }
    }
}

impl RunStats {
    pub fn lyapunov_monotone(&self) -> bool {
        self.lyapunov_increases == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub status: RunStatus,
    pub traversal: Option<Traversal>,
    pub trace: Vec<TraceSample>,
    pub stats: RunStats,
}

impl RunResult {
    pub fn traversed(&self) -> bool {
        self.status == RunStatus::Traversed
    }

    /// Crossed the plane inside the opening.
    pub fn safe(&self) -> bool {
        self.traversal.is_some_and(|t| t.inside)
    }

    pub fn miss_distance(&self) -> Option<f64> {
        self.traversal.map(|t| t.miss)
    }

    pub fn traversal_time(&self) -> Option<f64> {
        self.traversal.map(|t| t.time)
    }

    pub fn lyapunov_samples(&self) -> impl Iterator<Item = LyapunovSample> + '_ {
        self.trace.iter().map(|s| LyapunovSample {
            w: s.w,
            w_dot: s.w_dot,
            t: s.t,
        })
    }
}

/// Builds trace samples and keeps the running statistics.
#[derive(Debug)]
pub(crate) struct Recorder {
    record: bool,
    trace: Vec<TraceSample>,
    stats: RunStats,
    prev: Option<(f64, f64, bool)>,
}

impl Recorder {
    pub fn new(record: bool) -> Self {
        Self {
            record,
            trace: Vec::new(),
            stats: RunStats::default(),
            prev: None,
        }
    }

    /// Records one sample; the vehicle must be on the approach side.
    #[allow(clippy::too_many_arguments)]
    pub fn sample(
        &mut self,
        t: f64,
        pos: &Vec3,
        vel: &Vec3,
        att: &Vec3,
        cmd: &GuidanceCommand,
        speed: f64,
        window: &WindowSpec,
    ) -> Result<TraceSample, GeometryError> {
        let los = lines_of_sight(pos, window)?;
        let bearings = BearingSet {
            alpha: los.map(|l| l.alpha),
            beta: los.map(|l| l.beta),
        };
        let disp = displacements_from_los(&los);
        let ly = lyapunov(&disp, cmd.gamma_des, cmd.chi_des, speed, t);
        let sample = TraceSample {
            t,
            pos: *pos,
            vel: *vel,
            att: *att,
            gamma_des: cmd.gamma_des,
            chi_des: cmd.chi_des,
            bearings,
            s_gamma: cmd.shaping.s_gamma,
            s_chi: cmd.shaping.s_chi,
            disp,
            w: ly.w,
            w_dot: ly.w_dot,
        };

        let st = &mut self.stats;
        if st.samples == 0 {
            st.initial_w = ly.w;
        }
        st.samples += 1;
        st.final_w = ly.w;
        st.max_abs_roll = st.max_abs_roll.max(att.x.abs());
        st.max_abs_pitch = st.max_abs_pitch.max(att.y.abs());
        let d = disp.distance();
        if d > LYAPUNOV_DEADBAND && !cmd.traversal_latched && ly.w_dot >= 0.0 {
            st.lyapunov_rate_violations += 1;
        }
        // After the latch the command is frozen and W is flat by design.
        if let Some((w_prev, d_prev, latched_prev)) = self.prev {
            if !latched_prev && d_prev > LYAPUNOV_DEADBAND && ly.w >= w_prev {
                st.lyapunov_increases += 1;
            }
        }
        self.prev = Some((ly.w, d, cmd.traversal_latched));
        if self.record {
            self.trace.push(sample);
        }
        Ok(sample)
    }

    pub fn note_commanded_tilt(&mut self, roll: f64, pitch: f64) {
        self.stats.max_abs_roll_cmd = self.stats.max_abs_roll_cmd.max(roll.abs());
        self.stats.max_abs_pitch_cmd = self.stats.max_abs_pitch_cmd.max(pitch.abs());
    }

    pub fn note_tracking_error(&mut self, err: f64) {
        self.stats.max_tracking_error = self.stats.max_tracking_error.max(err);
    }

    pub fn finish(self, status: RunStatus, traversal: Option<Traversal>) -> RunResult {
        RunResult {
            status,
            traversal,
            trace: self.trace,
            stats: self.stats,
        }
    }
}

/// Interpolates the crossing of the window plane between two positions
/// straddling it.
pub(crate) fn plane_crossing(window: &WindowSpec, before: &Vec3, after: &Vec3, t_before: f64, dt: f64) -> (Vec3, f64) {
    let plane = window.plane_y();
    let span = after.y - before.y;
    let f = if span > 0.0 {
        ((plane - before.y) / span).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let mut point = before + (after - before) * f;
    point.y = plane;
    (point, t_before + f * dt)
}

pub(crate) fn make_traversal(
    window: &WindowSpec,
    point: Vec3,
    time: f64,
    latched: bool,
    last: &TraceSample,
) -> Traversal {
    Traversal {
        point,
        time,
        miss: (point - window.centroid()).norm(),
        inside: window.contains(&point),
        latched,
        bearings_before: last.bearings,
        velocity_before: last.vel,
    }
}
