//! File formats: trajectory and statistics CSVs, phase-portrait CSVs and the
//! JSON run summary. All CSVs use LF line endings and print floats with
//! nine significant digits.

use std::io::Write;

use serde::Serialize;

use crate::experiments::MonteCarloStats;
use crate::run::{RunResult, RunStatus, TraceSample};
use crate::sim_kinematic::PhasePortrait;

/// Process exit codes shared by the CLI and the run summary.
pub mod exit_code {
    /// Crossed the plane inside the opening.
    pub const OK: i32 = 0;
    /// I/O or other runtime failure.
    pub const ERROR: i32 = 1;
    pub const CONFIG_INVALID: i32 = 2;
    /// `t_max` elapsed before the plane was reached.
    pub const TIMED_OUT: i32 = 3;
    pub const DIVERGED: i32 = 4;
    /// Crossed the plane outside the opening.
    pub const UNSAFE: i32 = 5;
}

pub const TRAJECTORY_HEADER: [&str; 26] = [
    "t",
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "vz",
    "phi",
    "theta",
    "psi",
    "gamma_des",
    "chi_des",
    "alpha1",
    "alpha2",
    "alpha3",
    "alpha4",
    "beta1",
    "beta2",
    "beta3",
    "beta4",
    "S_gamma",
    "S_chi",
    "D_x",
    "D_z",
    "W",
    "W_dot",
];

pub const STATS_HEADER: [&str; 5] = ["sigma_deg", "mean_miss_m", "std_miss_m", "success_rate", "n"];

pub const RUNS_HEADER: [&str; 13] = [
    "sigma_deg",
    "run",
    "seed",
    "x0",
    "y0",
    "z0",
    "status",
    "x_T",
    "y_T",
    "z_T",
    "t_T",
    "miss_m",
    "safe",
];

pub const PORTRAIT_HEADER: [&str; 4] = ["trajectory_id", "t", "angle_a_deg", "angle_b_deg"];

/// Nine significant digits, `.` decimal separator, round-trips through any
/// float parser.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded:?}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn trace_row(s: &TraceSample) -> Vec<String> {
    let mut v = vec![s.t];
    v.extend(s.pos.iter());
    v.extend(s.vel.iter());
    v.extend(s.att.iter());
    v.extend([s.gamma_des, s.chi_des]);
    v.extend(s.bearings.alpha);
    v.extend(s.bearings.beta);
    v.extend([s.s_gamma, s.s_chi, s.disp.dx, s.disp.dz, s.w, s.w_dot]);
    v.into_iter().map(fmt_sig).collect()
}

pub fn write_trajectory_csv<W: Write>(out: W, trace: &[TraceSample]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in trace {
        w.write_record(trace_row(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stats_csv<W: Write>(out: W, stats: &MonteCarloStats) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(STATS_HEADER)?;
    for s in &stats.per_sigma {
        w.write_record([
            fmt_sig(s.sigma.to_degrees()),
            fmt_sig(s.mean_miss),
            fmt_sig(s.std_miss),
            fmt_sig(s.success_rate),
            s.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs_csv<W: Write>(out: W, stats: &MonteCarloStats) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(RUNS_HEADER)?;
    for r in &stats.runs {
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        w.write_record([
            fmt_sig(r.sigma.to_degrees()),
            r.index.to_string(),
            r.seed.to_string(),
            fmt_sig(r.start.x),
            fmt_sig(r.start.y),
            fmt_sig(r.start.z),
            r.status.label().to_string(),
            opt(r.point.map(|p| p.x)),
            opt(r.point.map(|p| p.y)),
            opt(r.point.map(|p| p.z)),
            opt(r.time),
            opt(r.miss),
            r.safe.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sample, angles in degrees, followed by an `equilibrium` row
/// with an empty time field.
pub fn write_portrait_csv<W: Write>(out: W, portrait: &PhasePortrait) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(PORTRAIT_HEADER)?;
    for tr in &portrait.trajectories {
        for &(a, b, t) in &tr.samples {
            w.write_record([
                tr.id.to_string(),
                fmt_sig(t),
                fmt_sig(a.to_degrees()),
                fmt_sig(b.to_degrees()),
            ])?;
        }
    }
    let (a, b) = portrait.equilibrium;
    w.write_record([
        "equilibrium".to_string(),
        String::new(),
        fmt_sig(a.to_degrees()),
        fmt_sig(b.to_degrees()),
    ])?;
    w.flush()?;
    Ok(())
}

/// Exit code for a single run.
pub fn run_exit_code(run: &RunResult) -> i32 {
    match run.status {
        RunStatus::Traversed if run.safe() => exit_code::OK,
        RunStatus::Traversed => exit_code::UNSAFE,
        RunStatus::TimedOut => exit_code::TIMED_OUT,
        RunStatus::Diverged(_) => exit_code::DIVERGED,
    }
}

/// Exit code for a batch: the worst outcome among its runs.
pub fn batch_exit_code(stats: &MonteCarloStats) -> i32 {
    let has = |f: &dyn Fn(&RunStatus) -> bool| stats.runs.iter().any(|r| f(&r.status));
    if has(&|s| matches!(s, RunStatus::Diverged(_))) {
        exit_code::DIVERGED
    } else if has(&|s| *s == RunStatus::TimedOut) {
        exit_code::TIMED_OUT
    } else if stats.runs.iter().any(|r| !r.safe) {
        exit_code::UNSAFE
    } else {
        exit_code::OK
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraversalDoc {
    pub point: [f64; 3],
    pub time: f64,
    pub miss_distance: f64,
    pub inside: bool,
    pub latched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovDoc {
    pub monotone: bool,
    pub increases: usize,
    pub rate_violations: usize,
    pub initial_w: f64,
    pub final_w: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummaryDoc {
    pub fidelity: String,
    pub status: String,
    pub message: Option<String>,
    pub exit_code: i32,
    pub success: bool,
    pub traversal: Option<TraversalDoc>,
    /// Roll, pitch, yaw minima over the run, rad.
    pub attitude_min: [f64; 3],
    pub attitude_max: [f64; 3],
    pub max_abs_roll_cmd: f64,
    pub max_abs_pitch_cmd: f64,
    pub max_tracking_error: f64,
    pub lyapunov: LyapunovDoc,
    pub samples: usize,
}

impl RunSummaryDoc {
    pub fn new(fidelity: &str, run: &RunResult) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for s in &run.trace {
            for i in 0..3 {
                lo[i] = lo[i].min(s.att[i]);
                hi[i] = hi[i].max(s.att[i]);
            }
        }
        if run.trace.is_empty() {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let st = &run.stats;
        Self {
            fidelity: fidelity.to_string(),
            status: run.status.label().to_string(),
            message: match &run.status {
                RunStatus::Diverged(m) => Some(m.clone()),
                _ => None,
            },
            exit_code: run_exit_code(run),
            success: run.safe(),
            traversal: run.traversal.map(|t| TraversalDoc {
                point: [t.point.x, t.point.y, t.point.z],
                time: t.time,
                miss_distance: t.miss,
                inside: t.inside,
                latched: t.latched,
            }),
            attitude_min: lo,
            attitude_max: hi,
            max_abs_roll_cmd: st.max_abs_roll_cmd,
            max_abs_pitch_cmd: st.max_abs_pitch_cmd,
            max_tracking_error: st.max_tracking_error,
            lyapunov: LyapunovDoc {
                monotone: st.lyapunov_monotone(),
                increases: st.lyapunov_increases,
                rate_violations: st.lyapunov_rate_violations,
                initial_w: st.initial_w,
                final_w: st.final_w,
            },
            samples: st.samples,
        }
    }
}

pub fn write_summary_json<W: Write>(out: W, doc: &RunSummaryDoc) -> serde_json::Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, doc)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}
