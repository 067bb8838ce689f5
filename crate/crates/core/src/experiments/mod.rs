//! Reference scenarios, the noisy-bearing case and the Monte Carlo harness.

pub mod noise;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{Vec3, WindowSpec};
use crate::guidance::GuidanceConfig;
use crate::run::{RunResult, RunStatus};
use crate::sim_kinematic::SimError;
use crate::sim_sixdof::{run_sixdof, ControllerGains, QuadParams, RigidBodyState, SixDofConfig};

use noise::{mix_seed, NoiseConfig};

/// Everything needed for one closed-loop 6-DOF run apart from the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub window: WindowSpec,
    pub start: Vec3,
    pub guidance: GuidanceConfig,
    pub gains: ControllerGains,
    pub params: QuadParams,
    pub sim: SixDofConfig,
}

impl Scenario {
    /// Reference window, start at the origin at rest, 1 m/s.
    pub fn reference() -> Self {
        Self {
            window: WindowSpec::reference(),
            start: Vec3::zeros(),
            guidance: GuidanceConfig::default(),
            gains: ControllerGains::default(),
            params: QuadParams::default(),
            sim: SixDofConfig::default(),
        }
    }

    pub fn run(&self, noise: Option<&NoiseConfig>) -> Result<RunResult, SimError> {
        run_sixdof(
            &RigidBodyState::at_rest(self.start),
            &self.window,
            &self.guidance,
            &self.gains,
            &self.params,
            &self.sim,
            noise,
        )
    }
}

/// Noise-free run of the reference scenario.
pub fn run_case1() -> Result<RunResult, SimError> {
    Scenario::reference().run(None)
}

/// Reference scenario with unfiltered noisy bearings.
pub fn run_case2(sigma: f64, seed: u64) -> Result<RunResult, SimError> {
    Scenario::reference().run(Some(&NoiseConfig { sigma, seed }))
}

/// Axis-aligned box of start positions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Default for StartBox {
    fn default() -> Self {
        Self {
            x: [0.0, 30.0],
            y: [0.0, 14.0],
            z: [0.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    pub n_runs: usize,
    pub start_box: StartBox,
    /// Noise levels, rad.
    pub sigmas: Vec<f64>,
    pub base: Scenario,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl MonteCarloSpec {
    /// 100 starts per noise level, sigma = 1..=7 deg.
    pub fn reference(master_seed: u64) -> Self {
        Self {
            n_runs: 100,
            start_box: StartBox::default(),
            sigmas: (1..=7).map(|d| (d as f64).to_radians()).collect(),
            base: Scenario::reference(),
            master_seed,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_runs == 0 {
            return Err(SimError::InvalidScenario("n_runs must be at least 1".into()));
        }
        if self.sigmas.is_empty() {
            return Err(SimError::InvalidScenario("at least one noise level is required".into()));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SimError::InvalidScenario("noise levels must be non-negative".into()));
        }
        let b = &self.start_box;
        for (name, [lo, hi]) in [("x", b.x), ("y", b.y), ("z", b.z)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(SimError::InvalidScenario(format!("start box {name} range is empty")));
            }
        }
        if b.y[0] >= self.base.window.plane_y() {
            return Err(SimError::InvalidScenario(
                "start box lies entirely past the window plane".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(SimError::InvalidScenario("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Start position of run `index`, shared by every noise level.
    pub fn start_position(&self, index: usize) -> Vec3 {
        const START_STREAM: u64 = u64::MAX;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[self.master_seed, START_STREAM, index as u64]));
        let plane = self.base.window.plane_y();
        let b = &self.start_box;
        let draw = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.random_range(lo..=hi) };
        loop {
            let p = Vec3::new(draw(&mut rng, b.x), draw(&mut rng, b.y), draw(&mut rng, b.z));
            if p.y < plane {
                return p;
            }
        }
    }

    /// Noise seed of run `index` at noise level `sigma_index`.
    pub fn noise_seed(&self, sigma_index: usize, index: usize) -> u64 {
        mix_seed(&[self.master_seed, sigma_index as u64, index as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub sigma: f64,
    pub index: usize,
    pub start: Vec3,
    pub seed: u64,
    pub status: RunStatus,
    pub point: Option<Vec3>,
    pub time: Option<f64>,
    pub miss: Option<f64>,
    pub safe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaStats {
    /// rad.
    pub sigma: f64,
    pub mean_miss: f64,
    /// Population standard deviation.
    pub std_miss: f64,
    pub success_rate: f64,
    /// Runs that crossed the window plane.
    pub n: usize,
    /// Runs that timed out or lost control.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloStats {
    pub per_sigma: Vec<SigmaStats>,
    pub runs: Vec<RunSummary>,
}

/// Mean and population standard deviation; `(NaN, NaN)` for no samples.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarise(sigma: f64, runs: &[RunSummary]) -> SigmaStats {
    let misses: Vec<f64> = runs.iter().filter_map(|r| r.miss).collect();
    let (mean_miss, std_miss) = mean_std(&misses);
    let safe = runs.iter().filter(|r| r.safe).count();
    SigmaStats {
        sigma,
        mean_miss,
        std_miss,
        success_rate: safe as f64 / runs.len() as f64,
        n: misses.len(),
        failures: runs.len() - misses.len(),
    }
}

/// Runs every (noise level, start) pair of `spec` in parallel. Results are
/// reduced in index order, so the statistics do not depend on scheduling.
pub fn run_monte_carlo(spec: &MonteCarloSpec) -> Result<MonteCarloStats, SimError> {
    spec.validate()?;
    let base = Scenario {
        sim: SixDofConfig {
            record_trace: false,
            ..spec.base.sim
        },
        ..spec.base.clone()
    };
    let jobs: Vec<(usize, usize)> = (0..spec.sigmas.len())
        .flat_map(|s| (0..spec.n_runs).map(move |i| (s, i)))
        .collect();

    let work = || {
        jobs.par_iter()
            .map(|&(si, i)| {
                let sigma = spec.sigmas[si];
                let start = spec.start_position(i);
                let seed = spec.noise_seed(si, i);
                let scenario = Scenario { start, ..base.clone() };
                let noise = NoiseConfig { sigma, seed };
                match scenario.run(Some(&noise)) {
                    Ok(run) => RunSummary {
                        sigma,
                        index: i,
                        start,
                        seed,
                        safe: run.safe(),
                        point: run.traversal.map(|t| t.point),
                        time: run.traversal_time(),
                        miss: run.miss_distance(),
                        status: run.status,
                    },
                    Err(e) => RunSummary {
                        sigma,
                        index: i,
                        start,
                        seed,
                        status: RunStatus::Diverged(e.to_string()),
                        point: None,
                        time: None,
                        miss: None,
                        safe: false,
                    },
                }
            })
            .collect::<Vec<_>>()
    };
    let runs = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::InvalidScenario(e.to_string()))?
            .install(work),
        None => work(),
    };

    let per_sigma = spec
        .sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| summarise(sigma, &runs[si * spec.n_runs..(si + 1) * spec.n_runs]))
        .collect();
    Ok(MonteCarloStats { per_sigma, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn starts_are_deterministic_and_in_box() {
        let spec = MonteCarloSpec::reference(42);
        for i in 0..50 {
            let p = spec.start_position(i);
            assert_eq!(p, spec.start_position(i));
            assert!((0.0..=30.0).contains(&p.x));
            assert!((0.0..=14.0).contains(&p.y));
            assert!((0.0..=20.0).contains(&p.z));
        }
        assert_ne!(spec.start_position(0), spec.start_position(1));
    }

    #[test]
    fn rejection_keeps_starts_on_approach_side() {
        let mut spec = MonteCarloSpec::reference(1);
        spec.start_box.y = [10.0, 20.0];
        for i in 0..20 {
            assert!(spec.start_position(i).y < 15.0);
        }
    }

    #[test]
    fn validation() {
        let mut spec = MonteCarloSpec::reference(1);
        spec.n_runs = 0;
        assert!(spec.validate().is_err());
        let mut spec = MonteCarloSpec::reference(1);
        spec.sigmas.clear();
        assert!(spec.validate().is_err());
        let mut spec = MonteCarloSpec::reference(1);
        spec.start_box.y = [15.0, 20.0];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn singleton_matches_case1() {
        let mut spec = MonteCarloSpec::reference(5);
        spec.n_runs = 1;
        spec.sigmas = vec![0.0];
        spec.start_box = StartBox {
            x: [0.0, 0.0],
            y: [0.0, 0.0],
            z: [0.0, 0.0],
        };
        let stats = run_monte_carlo(&spec).unwrap();
        let case1 = run_case1().unwrap();
        let s = stats.per_sigma[0];
        assert_eq!(s.n, 1);
        assert_eq!(s.std_miss, 0.0);
        assert_eq!(s.mean_miss, case1.miss_distance().unwrap());
        assert_eq!(s.success_rate, 1.0);
    }
}
