//! `winguide` command-line tool.
//!
//! Exit codes: 0 crossed inside the window, 1 I/O or other error, 2 invalid
//! configuration, 3 timed out before reaching the plane, 4 lost control,
//! 5 crossed the plane outside the window.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use winguide::config::{load_config, parse_config, ConfigError, Fidelity, ScenarioConfig};
use winguide::experiments::noise::NoiseConfig;
use winguide::experiments::run_monte_carlo;
use winguide::output::{self, exit_code, RunSummaryDoc};
use winguide::run::{RunResult, RunStatus};
use winguide::sim_kinematic::{phase_portrait, run_kinematic, PhasePlane};
use winguide::SimError;

#[derive(Parser)]
#[command(
    name = "winguide",
    version,
    about = "Bearings-only window traversal guidance simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one scenario and write trajectory.csv and summary.json.
    Run,
    /// Run the noisy-bearing batch and write stats.csv and runs.csv.
    Montecarlo,
    /// Sweep the initial conditions through the kinematic model and write one CSV per plane.
    PhasePortrait,
    /// Parse and validate the configuration without running anything.
    ValidateConfig,
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; defaults to the Case 1 reference scenario.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Noise seed for `run`, master seed for `montecarlo`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Bearing noise level in degrees; a single level for `montecarlo`.
    #[arg(long, global = true, value_name = "X")]
    sigma_deg: Option<f64>,
    /// Vehicle model: sixdof or kinematic.
    #[arg(long, global = true, value_name = "MODEL", value_parser = clap::value_parser!(Fidelity))]
    fidelity: Option<Fidelity>,
    /// Integration step, s.
    #[arg(long, global = true, value_name = "X")]
    dt: Option<f64>,
    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => exit_code::CONFIG_INVALID,
            Failure::Io(_) => exit_code::ERROR,
        }
    }

    fn report(&self) {
        let (kind, msg) = match self {
            Failure::Config(m) => ("config_invalid", m),
            Failure::Io(m) => ("error", m),
        };
        let doc = serde_json::json!({ "error": kind, "message": msg, "exit_code": self.code() });
        eprintln!("{doc}");
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            f.report();
            f.code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => load_config(path)?,
        None => parse_config("")?,
    };
    if let Some(f) = c.fidelity {
        cfg.fidelity = f;
    }
    if let Some(dt) = c.dt {
        cfg.dt = Some(dt);
    }
    match cli.command {
        Command::Run => {
            if let Some(sigma) = c.sigma_deg {
                let seed = c.seed.or(cfg.noise.map(|n| n.seed)).unwrap_or(0);
                cfg.noise = Some(NoiseConfig::from_degrees(sigma, seed));
            } else if let (Some(seed), Some(n)) = (c.seed, cfg.noise.as_mut()) {
                n.seed = seed;
            }
        }
        Command::Montecarlo => {
            if let Some(seed) = c.seed {
                cfg.montecarlo.master_seed = seed;
            }
            if let Some(sigma) = c.sigma_deg {
                cfg.montecarlo.sigma_deg = vec![sigma];
            }
        }
        Command::PhasePortrait | Command::ValidateConfig => {}
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;

    match cli.command {
        Command::ValidateConfig => {
            if !c.quiet {
                describe(&cfg);
            }
            Ok(exit_code::OK)
        }
        Command::Run => cmd_run(&cfg, c.quiet),
        Command::Montecarlo => cmd_montecarlo(&cfg, c.quiet),
        Command::PhasePortrait => cmd_phase_portrait(&cfg, c.quiet),
    }
}

fn describe(cfg: &ScenarioConfig) {
    let v: Vec<String> = cfg
        .window
        .vertices()
        .iter()
        .map(|p| format!("({}, {}, {})", p.x, p.y, p.z))
        .collect();
    println!("config ok");
    println!("  window     {}", v.join(" "));
    println!("  start      ({}, {}, {})", cfg.start.x, cfg.start.y, cfg.start.z);
    println!(
        "  fidelity   {} (dt {} s, t_max {} s)",
        cfg.fidelity.name(),
        cfg.step(),
        cfg.t_max
    );
    println!("  speed      {} m/s", cfg.guidance.speed);
    match cfg.noise {
        Some(n) => println!("  noise      {} deg, seed {}", n.sigma.to_degrees(), n.seed),
        None => println!("  noise      none"),
    }
    let mc = &cfg.montecarlo;
    println!(
        "  montecarlo {} runs x {} levels, master seed {}",
        mc.n_runs,
        mc.sigma_deg.len(),
        mc.master_seed
    );
    println!("  portrait   {} initial conditions", cfg.initial_conditions.len());
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn cmd_run(cfg: &ScenarioConfig, quiet: bool) -> Result<i32, Failure> {
    let result = match cfg.fidelity {
        Fidelity::Kinematic => run_kinematic(&cfg.start, &cfg.window, &cfg.guidance, &cfg.kinematic_config()),
        Fidelity::Sixdof => cfg.scenario().run(cfg.noise.as_ref()),
    };
    let run = match result {
        Ok(run) => run,
        Err(SimError::InvalidScenario(m)) => return Err(Failure::Config(m)),
        // Geometry or guidance failures mid-flight end the run like a loss of control.
        Err(e) => RunResult {
            status: RunStatus::Diverged(e.to_string()),
            traversal: None,
            trace: Vec::new(),
            stats: Default::default(),
        },
    };
    let dir = &cfg.output_dir;
    output::write_trajectory_csv(create(dir, "trajectory.csv")?, &run.trace)?;
    let doc = RunSummaryDoc::new(cfg.fidelity.name(), &run);
    output::write_summary_json(create(dir, "summary.json")?, &doc)?;
    if !quiet {
        match &run.traversal {
            Some(t) => println!(
                "{}: crossed at ({:.4}, {:.4}, {:.4}) t = {:.3} s, miss {:.4} m, {}",
                doc.status,
                t.point.x,
                t.point.y,
                t.point.z,
                t.time,
                t.miss,
                if t.inside { "inside window" } else { "OUTSIDE window" }
            ),
            None => println!(
                "{}{}",
                doc.status,
                doc.message.as_ref().map(|m| format!(": {m}")).unwrap_or_default()
            ),
        }
        println!("wrote {}", dir.display());
    }
    if let RunStatus::Diverged(m) = &run.status {
        let err = serde_json::json!({ "error": "diverged", "message": m, "exit_code": doc.exit_code });
        eprintln!("{err}");
    }
    Ok(doc.exit_code)
}

fn cmd_montecarlo(cfg: &ScenarioConfig, quiet: bool) -> Result<i32, Failure> {
    if cfg.fidelity != Fidelity::Sixdof {
        return Err(Failure::Config("montecarlo requires sixdof fidelity".into()));
    }
    let spec = cfg.montecarlo_spec();
    let stats = run_monte_carlo(&spec).map_err(|e| match e {
        SimError::InvalidScenario(m) => Failure::Config(m),
        other => Failure::Io(other.to_string()),
    })?;
    let dir = &cfg.output_dir;
    output::write_stats_csv(create(dir, "stats.csv")?, &stats)?;
    output::write_runs_csv(create(dir, "runs.csv")?, &stats)?;
    if !quiet {
        println!("sigma_deg  mean_miss_m  std_miss_m  success_rate    n");
        for s in &stats.per_sigma {
            println!(
                "{:>9.3}  {:>11.4}  {:>10.4}  {:>12.3}  {:>3}",
                s.sigma.to_degrees(),
                s.mean_miss,
                s.std_miss,
                s.success_rate,
                s.n
            );
        }
        println!("wrote {}", dir.display());
    }
    Ok(output::batch_exit_code(&stats))
}

fn cmd_phase_portrait(cfg: &ScenarioConfig, quiet: bool) -> Result<i32, Failure> {
    let dir = &cfg.output_dir;
    let mut code = exit_code::OK;
    for plane in [PhasePlane::Elevation, PhasePlane::Azimuth] {
        let p = phase_portrait(
            plane,
            &cfg.initial_conditions,
            &cfg.window,
            &cfg.guidance,
            &cfg.kinematic_config(),
        )
        .map_err(|e| Failure::Config(e.to_string()))?;
        if p.trajectories.iter().any(|t| t.status != RunStatus::Traversed) {
            code = exit_code::TIMED_OUT;
        }
        let name = format!("portrait_{}.csv", plane.name());
        output::write_portrait_csv(create(dir, &name)?, &p)?;
        if !quiet {
            println!(
                "{}: {} trajectories -> {}",
                plane.name(),
                p.trajectories.len(),
                dir.join(&name).display()
            );
        }
    }
    Ok(code)
}
