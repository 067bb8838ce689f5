//! Bearings-only guidance that steers a quadrotor through the centroid of a
//! rectangular window using only the elevation and azimuth of its four
//! vertices.
//!
//! - [`geometry`]: window model, bearings, relative kinematics, Lyapunov terms
//! - [`guidance`]: shaping angles and the flight-path/heading commands
//! - [`sim_kinematic`]: ideal point-mass runs and phase portraits
//! - [`sim_sixdof`]: rigid-body model with cascaded PD control
//! - [`experiments`]: reference scenarios, bearing noise, Monte Carlo
//! - [`config`], [`output`]: scenario files and CSV/summary writers used by the CLI

pub mod config;
pub mod experiments;
pub mod geometry;
pub mod guidance;
pub mod output;
pub mod run;
pub mod sim_kinematic;
pub mod sim_sixdof;

pub use geometry::{BearingSet, Vec3, WindowSpec};
pub use guidance::{GuidanceCommand, GuidanceConfig};
pub use run::{RunResult, RunStatus};
pub use sim_kinematic::SimError;
