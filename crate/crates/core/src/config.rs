//! TOML scenario configuration.
//!
//! Every key is optional; an empty document yields the Case 1 reference
//! scenario. See `configs/case1.toml` at the repository root for the full
//! set of keys with their default values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::experiments::noise::NoiseConfig;
use crate::experiments::{MonteCarloSpec, Scenario, StartBox};
use crate::geometry::{Vec3, WindowSpec};
use crate::guidance::{GuidanceConfig, VertexPairing};
use crate::sim_kinematic::{self, InitialCondition, KinematicConfig};
use crate::sim_sixdof::{self, ControllerGains, QuadParams, SixDofConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Point mass flying the commanded velocity exactly.
    Kinematic,
    /// Rigid-body quadrotor with the cascaded controller.
    #[default]
    Sixdof,
}

impl Fidelity {
    pub fn name(&self) -> &'static str {
        match self {
            Fidelity::Kinematic => "kinematic",
            Fidelity::Sixdof => "sixdof",
        }
    }

    pub fn default_dt(&self) -> f64 {
        match self {
            Fidelity::Kinematic => sim_kinematic::DEFAULT_DT,
            Fidelity::Sixdof => sim_sixdof::DEFAULT_DT,
        }
    }
}

impl std::str::FromStr for Fidelity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kinematic" => Ok(Fidelity::Kinematic),
            "sixdof" => Ok(Fidelity::Sixdof),
            other => Err(format!("unknown fidelity '{other}', expected kinematic or sixdof")),
        }
    }
}

// Raw document shape. Everything defaults so partial files work.

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    fidelity: Fidelity,
    start: [f64; 3],
    speed: f64,
    dt: Option<f64>,
    t_max: f64,
    traversal_tol_deg: f64,
    pairing: VertexPairing,
    tilt_limit_deg: f64,
    window: RawWindow,
    gains: ControllerGains,
    params: QuadParams,
    noise: Option<RawNoise>,
    montecarlo: RawMonteCarlo,
    phase_portrait: RawPortrait,
    output: RawOutput,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            fidelity: Fidelity::Sixdof,
            start: [0.0; 3],
            speed: 1.0,
            dt: None,
            t_max: 200.0,
            traversal_tol_deg: 0.5,
            pairing: VertexPairing::Primary,
            tilt_limit_deg: 20.0,
            window: RawWindow::default(),
            gains: ControllerGains::default(),
            params: QuadParams::default(),
            noise: None,
            montecarlo: RawMonteCarlo::default(),
            phase_portrait: RawPortrait::default(),
            output: RawOutput::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawWindow {
    e1: [f64; 3],
    e2: [f64; 3],
    e3: [f64; 3],
    e4: [f64; 3],
}

impl Default for RawWindow {
    fn default() -> Self {
        let w = WindowSpec::reference();
        let v = |i| {
            let p: Vec3 = w.vertex(i);
            [p.x, p.y, p.z]
        };
        Self {
            e1: v(1),
            e2: v(2),
            e3: v(3),
            e4: v(4),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    sigma_deg: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawMonteCarlo {
    n_runs: usize,
    sigma_deg: Vec<f64>,
    master_seed: u64,
    threads: Option<usize>,
    start_box: StartBox,
}

impl Default for RawMonteCarlo {
    fn default() -> Self {
        Self {
            n_runs: 100,
            sigma_deg: (1..=7).map(f64::from).collect(),
            master_seed: 2024,
            threads: None,
            start_box: StartBox::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPortrait {
    initial_conditions: Option<Vec<RawInitialCondition>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialCondition {
    position: Option<[f64; 3]>,
    /// `[alpha1, alpha4, beta1, beta2]`, degrees.
    bearings_deg: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    dir: PathBuf,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Monte Carlo settings. Noise levels are kept in degrees as configured.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub n_runs: usize,
    pub sigma_deg: Vec<f64>,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub start_box: StartBox,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub window: WindowSpec,
    pub start: Vec3,
    pub guidance: GuidanceConfig,
    pub fidelity: Fidelity,
    /// Explicit step; `None` uses the fidelity's default.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// rad.
    pub tilt_limit: f64,
    pub gains: ControllerGains,
    pub params: QuadParams,
    pub noise: Option<NoiseConfig>,
    pub montecarlo: MonteCarloConfig,
    pub initial_conditions: Vec<InitialCondition>,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        parse_config("").expect("built-in defaults are valid")
    }
}

/// Parses and validates a TOML document, filling in defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
    let window = WindowSpec::new(
        Vec3::from(raw.window.e1),
        Vec3::from(raw.window.e2),
        Vec3::from(raw.window.e3),
        Vec3::from(raw.window.e4),
    )
    .map_err(|e| invalid(format!("window: {e}")))?;
    let guidance = GuidanceConfig {
        speed: raw.speed,
        traversal_tol: raw.traversal_tol_deg.to_radians(),
        pairing: raw.pairing,
    };
    let noise = raw.noise.map(|n| NoiseConfig::from_degrees(n.sigma_deg, n.seed));
    let initial_conditions = match raw.phase_portrait.initial_conditions {
        None => sim_kinematic::default_initial_conditions(),
        Some(list) => list
            .into_iter()
            .enumerate()
            .map(|(i, ic)| match (ic.position, ic.bearings_deg) {
                (Some(p), None) => Ok(InitialCondition::Position(Vec3::from(p))),
                (None, Some([a1, a4, b1, b2])) => Ok(InitialCondition::Bearings {
                    alpha1: a1.to_radians(),
                    alpha4: a4.to_radians(),
                    beta1: b1.to_radians(),
                    beta2: b2.to_radians(),
                }),
                _ => Err(invalid(format!(
                    "initial condition {i}: give exactly one of position or bearings_deg"
                ))),
            })
            .collect::<Result<_, _>>()?,
    };
    let cfg = ScenarioConfig {
        window,
        start: Vec3::from(raw.start),
        guidance,
        fidelity: raw.fidelity,
        dt: raw.dt,
        t_max: raw.t_max,
        tilt_limit: raw.tilt_limit_deg.to_radians(),
        gains: raw.gains,
        params: raw.params,
        noise,
        montecarlo: MonteCarloConfig {
            n_runs: raw.montecarlo.n_runs,
            sigma_deg: raw.montecarlo.sigma_deg,
            master_seed: raw.montecarlo.master_seed,
            threads: raw.montecarlo.threads,
            start_box: raw.montecarlo.start_box,
        },
        initial_conditions,
        output_dir: raw.output.dir,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.guidance.validate().map_err(|e| invalid(e.to_string()))?;
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(invalid(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.tilt_limit > 0.0 && self.tilt_limit < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("tilt_limit_deg must lie in (0, 90)"));
        }
        if !self.start.iter().all(|c| c.is_finite()) {
            return Err(invalid("start must be finite"));
        }
        if self.start.y >= self.window.plane_y() {
            return Err(invalid(format!(
                "start y = {} must lie on the approach side of the window plane y = {}",
                self.start.y,
                self.window.plane_y()
            )));
        }
        self.gains.validate().map_err(|e| invalid(e.to_string()))?;
        self.params.validate().map_err(|e| invalid(e.to_string()))?;
        if let Some(n) = &self.noise {
            if !(n.sigma.is_finite() && n.sigma >= 0.0) {
                return Err(invalid("noise sigma_deg must be non-negative"));
            }
            if self.fidelity == Fidelity::Kinematic {
                return Err(invalid("bearing noise requires sixdof fidelity"));
            }
        }
        let mc = &self.montecarlo;
        if mc.n_runs == 0 {
            return Err(invalid("montecarlo n_runs must be at least 1"));
        }
        if mc.sigma_deg.is_empty() {
            return Err(invalid("montecarlo sigma_deg must list at least one noise level"));
        }
        if mc.sigma_deg.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(invalid("montecarlo sigma_deg entries must be non-negative"));
        }
        self.montecarlo_spec()
            .validate()
            .map_err(|e| invalid(format!("montecarlo: {e}")))?;
        if self.initial_conditions.is_empty() {
            return Err(invalid("phase_portrait needs at least one initial condition"));
        }
        for (i, ic) in self.initial_conditions.iter().enumerate() {
            ic.position(&self.window)
                .map_err(|e| invalid(format!("initial condition {i}: {e}")))?;
        }
        Ok(())
    }

    /// Integration step actually used.
    pub fn step(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.fidelity.default_dt())
    }

    pub fn kinematic_config(&self) -> KinematicConfig {
        KinematicConfig {
            dt: self.step(),
            t_max: self.t_max,
            record_trace: true,
        }
    }

    pub fn sixdof_config(&self) -> SixDofConfig {
        SixDofConfig {
            dt: self.step(),
            t_max: self.t_max,
            tilt_limit: self.tilt_limit,
            ..SixDofConfig::default()
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            window: self.window.clone(),
            start: self.start,
            guidance: self.guidance,
            gains: self.gains,
            params: self.params,
            sim: self.sixdof_config(),
        }
    }

    pub fn montecarlo_spec(&self) -> MonteCarloSpec {
        let mc = &self.montecarlo;
        MonteCarloSpec {
            n_runs: mc.n_runs,
            start_box: mc.start_box,
            sigmas: mc.sigma_deg.iter().map(|d| d.to_radians()).collect(),
            base: self.scenario(),
            master_seed: mc.master_seed,
            threads: mc.threads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_document_is_case1() {
        let c = parse_config("").unwrap();
        assert_eq!(c.window, WindowSpec::reference());
        assert_eq!(c.start, Vec3::zeros());
        assert_eq!(c.fidelity, Fidelity::Sixdof);
        assert_eq!(c.step(), 0.002);
        assert_eq!(c.guidance, GuidanceConfig::default());
        assert_eq!(c.gains, ControllerGains::default());
        assert_eq!(c.params, QuadParams::default());
        assert!(c.noise.is_none());
        assert_eq!(c.montecarlo.sigma_deg, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(c.initial_conditions.len(), 11);
    }

    #[test]
    fn sigma_in_degrees() {
        let c = parse_config("[noise]\nsigma_deg = 4\nseed = 9\n").unwrap();
        let n = c.noise.unwrap();
        assert_abs_diff_eq!(n.sigma, 0.06981317007977318, epsilon = 1e-15);
        assert_eq!(n.seed, 9);
    }

    #[test]
    fn mismatched_plane_rejected() {
        let doc = "[window]\ne1 = [12.0, 15.0, 13.0]\ne2 = [16.0, 15.5, 13.0]\n";
        let err = parse_config(doc).unwrap_err().to_string();
        assert!(err.contains("vertices not coplanar"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_config("speed = [1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_config("sped = 1.0\n").unwrap_err().to_string();
        assert!(err.contains("sped"), "{err}");
    }

    #[test]
    fn partial_gains_keep_other_defaults() {
        let c = parse_config("[gains]\nkp_z = 5.0\n").unwrap();
        assert_eq!(c.gains.kp_z, 5.0);
        assert_eq!(c.gains.kd_z, ControllerGains::default().kd_z);
    }

    #[test]
    fn invariants_reported() {
        let cases = [
            ("[montecarlo]\nn_runs = 0\n", "n_runs"),
            ("speed = -1.0\n", "speed"),
            ("dt = 0.0\n", "dt"),
            ("start = [0.0, 20.0, 0.0]\n", "approach side"),
            ("[params]\nmass = 0.0\n", "mass"),
            ("fidelity = \"kinematic\"\n[noise]\nsigma_deg = 1.0\n", "sixdof"),
            ("[[phase_portrait.initial_conditions]]\n", "exactly one"),
            (
                "[[phase_portrait.initial_conditions]]\nposition = [0.0, 16.0, 0.0]\n",
                "initial condition 0",
            ),
        ];
        for (doc, needle) in cases {
            let err = parse_config(doc).unwrap_err();
            assert!(matches!(err, ConfigError::Invalid(_)), "{doc}: {err}");
            assert!(err.to_string().contains(needle), "{doc}: {err}");
        }
    }

    #[test]
    fn kinematic_default_step() {
        let c = parse_config("fidelity = \"kinematic\"\n").unwrap();
        assert_eq!(c.step(), 0.005);
        assert_eq!(c.kinematic_config().dt, 0.005);
    }

    #[test]
    fn portrait_conditions() {
        let doc = "[[phase_portrait.initial_conditions]]\nposition = [1.0, 2.0, 3.0]\n\
                   [[phase_portrait.initial_conditions]]\nbearings_deg = [36.82, 21.96, 54.77, 38.21]\n";
        let c = parse_config(doc).unwrap();
        assert_eq!(c.initial_conditions.len(), 2);
        assert_eq!(
            c.initial_conditions[0],
            InitialCondition::Position(Vec3::new(1.0, 2.0, 3.0))
        );
    }
}
