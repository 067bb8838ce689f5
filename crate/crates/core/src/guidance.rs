//! Bearings-only window traversal guidance.
//!
//! The commanded flight-path angle is the bisector of the elevations of the
//! two left vertices plus an elliptic shaping term; the commanded heading is
//! the bisector of the azimuths of the two top vertices plus its own shaping
//! term. Both shaping terms vanish exactly at the traversal geometry, where
//! the command becomes level flight along the window normal.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use thiserror::Error;

use crate::geometry::{BearingSet, SphericalVelocity, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("{what} = {value} is outside its domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid guidance config: {0}")]
    InvalidConfig(String),
    #[error("bearings are required until traversal is latched")]
    MissingBearings,
}

fn check_domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), GuidanceError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(GuidanceError::Domain { what, value, lo, hi })
    }
}

/// Signum with `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Reduces an angle to `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(TAU);
    if r >= TAU {
        r -= TAU;
    }
    r - PI
}

/// Which vertex pair feeds each command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexPairing {
    /// Elevations of `E1`, `E4`; azimuths of `E1`, `E2`.
    #[default]
    Primary,
    /// Elevations of `E2`, `E3`; azimuths of `E4`, `E3`.
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceConfig {
    /// Commanded speed, m/s.
    pub speed: f64,
    /// Half-width of the band around `beta_1 = π`, `beta_2 = 0` that latches
    /// the terminal command, rad.
    pub traversal_tol: f64,
    pub pairing: VertexPairing,
}

impl GuidanceConfig {
    pub const TERMINAL_GAMMA: f64 = 0.0;
    pub const TERMINAL_CHI: f64 = FRAC_PI_2;

    pub fn new(speed: f64, traversal_tol: f64) -> Result<Self, GuidanceError> {
        let cfg = Self {
            speed,
            traversal_tol,
            pairing: VertexPairing::Primary,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(GuidanceError::InvalidConfig(format!(
                "speed must be positive, got {}",
                self.speed
            )));
        }
        if !(self.traversal_tol.is_finite() && self.traversal_tol > 0.0) {
            return Err(GuidanceError::InvalidConfig(format!(
                "traversal tolerance must be positive, got {}",
                self.traversal_tol
            )));
        }
        Ok(())
    }
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            speed: 1.0,
            traversal_tol: 0.5f64.to_radians(),
            pairing: VertexPairing::Primary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingAngles {
    pub s_gamma: f64,
    pub s_chi: f64,
}

/// Flight-path shaping angle as a function of the elevation bisector.
///
/// On `[-π/2, 0]` the curve is the lower-left quarter ellipse through
/// `(-π/2, -π/4)` and the origin; on `(0, π/2]` its mirror image.
pub fn shaping_gamma(bisector: f64) -> Result<f64, GuidanceError> {
    check_domain("elevation bisector", bisector, -FRAC_PI_2, FRAC_PI_2)?;
    let centre = if bisector <= 0.0 { -FRAC_PI_2 } else { FRAC_PI_2 };
    let offset = bisector - centre;
    Ok(sgn(bisector) * (PI * PI - 4.0 * offset * offset).abs().sqrt() / 4.0)
}

/// Elevation bisector, shaping term and the resulting command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightPathCommand {
    pub bisector: f64,
    pub shaping: f64,
    /// `bisector + shaping` before folding into `[-π/2, π/2]`.
    pub unfolded: f64,
    pub gamma: f64,
}

impl FlightPathCommand {
    /// True when the unfolded angle already lies in `[-π/2, π/2]`.
    pub fn is_direct(&self) -> bool {
        self.unfolded.abs() <= FRAC_PI_2
    }
}

pub fn flight_path_command(alpha_top: f64, alpha_bottom: f64) -> Result<FlightPathCommand, GuidanceError> {
    check_domain("alpha_1", alpha_top, -FRAC_PI_2, FRAC_PI_2)?;
    check_domain("alpha_4", alpha_bottom, -FRAC_PI_2, FRAC_PI_2)?;
    let bisector = 0.5 * (alpha_top + alpha_bottom);
    let shaping = shaping_gamma(bisector)?;
    let unfolded = bisector + shaping;
    let gamma = if unfolded > FRAC_PI_2 {
        PI - unfolded
    } else if unfolded < -FRAC_PI_2 {
        -(PI + unfolded)
    } else {
        unfolded
    };
    Ok(FlightPathCommand {
        bisector,
        shaping,
        unfolded,
        gamma,
    })
}

/// Desired flight-path angle from the elevations of `E1` and `E4`.
pub fn gamma_des(alpha1: f64, alpha4: f64) -> Result<f64, GuidanceError> {
    flight_path_command(alpha1, alpha4).map(|c| c.gamma)
}

/// Heading shaping angle as a function of the azimuths of `E1` and `E2`.
pub fn shaping_chi(beta1: f64, beta2: f64) -> Result<f64, GuidanceError> {
    check_domain("beta_1", beta1, 0.0, PI)?;
    check_domain("beta_2", beta2, 0.0, PI)?;
    let sum = beta1 + beta2;
    Ok(sgn(0.5 * sum - FRAC_PI_2) * (PI * PI - sum * sum).abs().sqrt() / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingCommand {
    pub bisector: f64,
    pub shaping: f64,
    pub chi: f64,
}

pub fn heading_command(
    beta_left: f64,
    beta_right: f64,
    flight_path: &FlightPathCommand,
) -> Result<HeadingCommand, GuidanceError> {
    let shaping = shaping_chi(beta_left, beta_right)?;
    let bisector = 0.5 * (beta_left + beta_right);
    let h = bisector + shaping;
    let chi = if flight_path.is_direct() { h } else { -h };
    Ok(HeadingCommand {
        bisector,
        shaping,
        chi: wrap_angle(chi),
    })
}

/// Desired heading angle, wrapped to `[-π, π)`.
pub fn chi_des(beta1: f64, beta2: f64, alpha1: f64, alpha4: f64) -> Result<f64, GuidanceError> {
    let fp = flight_path_command(alpha1, alpha4)?;
    heading_command(beta1, beta2, &fp).map(|h| h.chi)
}

/// `|beta_1 - π| <= tol` and `|beta_2| <= tol`.
pub fn traversal_condition(bearings: &BearingSet, tol: f64) -> bool {
    (bearings.beta[0] - PI).abs() <= tol && bearings.beta[1].abs() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceCommand {
    pub gamma_des: f64,
    pub chi_des: f64,
    pub v_des: Vec3,
    pub traversal_latched: bool,
    pub shaping: ShapingAngles,
    pub elevation_bisector: f64,
    pub azimuth_bisector: f64,
}

impl GuidanceCommand {
    fn terminal(speed: f64) -> Self {
        let gamma_des = GuidanceConfig::TERMINAL_GAMMA;
        let chi_des = GuidanceConfig::TERMINAL_CHI;
        Self {
            gamma_des,
            chi_des,
            v_des: SphericalVelocity {
                speed,
                gamma: gamma_des,
                chi: chi_des,
            }
            .to_cartesian(),
            traversal_latched: true,
            shaping: ShapingAngles {
                s_gamma: 0.0,
                s_chi: 0.0,
            },
            elevation_bisector: 0.0,
            azimuth_bisector: FRAC_PI_2,
        }
    }
}

/// Turns bearings into commanded angles and the desired velocity, holding
/// level flight along the window normal once the traversal condition has
/// been met.
pub fn guidance_step(
    bearings: Option<&BearingSet>,
    cfg: &GuidanceConfig,
    latched: bool,
) -> Result<GuidanceCommand, GuidanceError> {
    if latched {
        return Ok(GuidanceCommand::terminal(cfg.speed));
    }
    let bearings = bearings.ok_or(GuidanceError::MissingBearings)?;
    if traversal_condition(bearings, cfg.traversal_tol) {
        return Ok(GuidanceCommand::terminal(cfg.speed));
    }
    let (a, b) = (bearings.alpha, bearings.beta);
    let (fp, hd) = match cfg.pairing {
        VertexPairing::Primary => {
            let fp = flight_path_command(a[0], a[3])?;
            (fp, heading_command(b[0], b[1], &fp)?)
        }
        VertexPairing::Alternate => {
            let fp = flight_path_command(a[1], a[2])?;
            (fp, heading_command(b[3], b[2], &fp)?)
        }
    };
    Ok(GuidanceCommand {
        gamma_des: fp.gamma,
        chi_des: hd.chi,
        v_des: SphericalVelocity {
            speed: cfg.speed,
            gamma: fp.gamma,
            chi: hd.chi,
        }
        .to_cartesian(),
        traversal_latched: false,
        shaping: ShapingAngles {
            s_gamma: fp.shaping,
            s_chi: hd.shaping,
        },
        elevation_bisector: fp.bisector,
        azimuth_bisector: hd.bisector,
    })
}

/// One rectangle-rule step of the desired-position integral.
pub fn desired_position(prev: &Vec3, v_des: &Vec3, dt: f64) -> Vec3 {
    debug_assert!(dt > 0.0);
    prev + v_des * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{bearing_angles, WindowSpec};
    use approx::assert_abs_diff_eq;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn shaping_gamma_examples() {
        assert_eq!(shaping_gamma(FRAC_PI_2).unwrap(), PI / 4.0);
        assert_eq!(shaping_gamma(0.0).unwrap(), 0.0);
        assert_eq!(shaping_gamma(-FRAC_PI_2).unwrap(), -PI / 4.0);
        assert_abs_diff_eq!(shaping_gamma(PI / 4.0).unwrap(), 0.6801747615878316, epsilon = 1e-15);
        assert!(matches!(shaping_gamma(1.6), Err(GuidanceError::Domain { .. })));
        assert!(shaping_gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_des_examples() {
        assert_eq!(gamma_des(FRAC_PI_2, FRAC_PI_2).unwrap(), PI / 4.0);
        assert_eq!(gamma_des(-FRAC_PI_2, -FRAC_PI_2).unwrap(), -PI / 4.0);
        assert_eq!(gamma_des(deg(36.87), -deg(36.87)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            gamma_des(PI / 4.0, PI / 4.0).unwrap(),
            1.4655729249852798,
            epsilon = 1e-15
        );
    }

    #[test]
    fn shaping_chi_examples() {
        assert_eq!(shaping_chi(1.0, PI - 1.0).unwrap().abs(), 0.0);
        assert_eq!(shaping_chi(PI, 0.0).unwrap(), 0.0);
        let s = shaping_chi(deg(54.77), deg(38.21)).unwrap();
        assert_abs_diff_eq!(s, -0.6725000646983591, epsilon = 1e-12);
        assert!(shaping_chi(-0.1, 1.0).is_err());
        assert!(shaping_chi(1.0, 3.2).is_err());
    }

    #[test]
    fn chi_des_examples() {
        let a = (0.6f64).asin();
        assert_eq!(chi_des(PI, 0.0, a, -a).unwrap(), FRAC_PI_2);
        let chi = chi_des(deg(54.77), deg(38.21), deg(36.82), deg(21.96)).unwrap();
        assert_abs_diff_eq!(chi, 0.13890350455380474, epsilon = 1e-12);
        let chi = chi_des(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert_eq!(chi, -FRAC_PI_2);
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-3.0 * PI / 2.0), FRAC_PI_2, epsilon = 1e-15);
        assert!(wrap_angle(-1e-18) < PI);
    }

    #[test]
    fn traversal_condition_examples() {
        let tol = deg(0.5);
        let mut b = BearingSet {
            alpha: [0.0; 4],
            beta: [PI, 0.0, 0.0, PI],
        };
        assert!(traversal_condition(&b, tol));
        b.beta[0] = deg(90.0);
        b.beta[1] = deg(45.0);
        assert!(!traversal_condition(&b, tol));
        b.beta[0] = deg(179.7);
        b.beta[1] = deg(0.4);
        assert!(traversal_condition(&b, tol));
    }

    #[test]
    fn latched_step_holds_window_normal() {
        let cfg = GuidanceConfig {
            speed: 2.0,
            ..Default::default()
        };
        let cmd = guidance_step(None, &cfg, true).unwrap();
        assert!(cmd.traversal_latched);
        assert_abs_diff_eq!(cmd.v_des, Vec3::new(0.0, 2.0, 0.0), epsilon = 1e-15);
        assert_eq!(guidance_step(None, &cfg, false), Err(GuidanceError::MissingBearings));
    }

    #[test]
    fn centroid_bearings_give_fixed_point() {
        let w = WindowSpec::reference();
        let cfg = GuidanceConfig::default();
        let b = BearingSet::terminal(&w);
        let cmd = guidance_step(Some(&b), &cfg, false).unwrap();
        assert_eq!((cmd.gamma_des, cmd.chi_des), (0.0, FRAC_PI_2));
        assert!(cmd.traversal_latched);
        // Same fixed point without relying on the latch.
        let fp = flight_path_command(b.alpha[0], b.alpha[3]).unwrap();
        let hd = heading_command(b.beta[0], b.beta[1], &fp).unwrap();
        assert_eq!((fp.gamma, hd.chi), (0.0, FRAC_PI_2));
        let alt = GuidanceConfig {
            pairing: VertexPairing::Alternate,
            ..cfg
        };
        let fp = flight_path_command(b.alpha[1], b.alpha[2]).unwrap();
        let hd = heading_command(b.beta[3], b.beta[2], &fp).unwrap();
        assert_eq!((fp.gamma, hd.chi), (0.0, FRAC_PI_2));
        assert!(guidance_step(Some(&b), &alt, false).unwrap().traversal_latched);
    }

    #[test]
    fn origin_start_is_quadrant_one() {
        let w = WindowSpec::reference();
        let b = bearing_angles(&Vec3::zeros(), &w).unwrap();
        let cmd = guidance_step(Some(&b), &GuidanceConfig::default(), false).unwrap();
        assert!(cmd.gamma_des > 0.0 && cmd.gamma_des < FRAC_PI_2);
        assert!(cmd.chi_des > 0.0 && cmd.chi_des < FRAC_PI_2);
        assert!(!cmd.traversal_latched);
        assert_abs_diff_eq!(cmd.v_des.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn desired_position_steps() {
        let p = desired_position(&Vec3::zeros(), &Vec3::new(0.0, 1.0, 0.0), 0.01);
        assert_eq!(p, Vec3::new(0.0, 0.01, 0.0));
        let v = Vec3::new(0.3, -0.2, 0.5);
        let mut q = Vec3::new(1.0, 2.0, 3.0);
        for _ in 0..100 {
            q = desired_position(&q, &v, 0.01);
        }
        assert_abs_diff_eq!(q, Vec3::new(1.0, 2.0, 3.0) + v, epsilon = 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(GuidanceConfig::new(0.0, 0.01).is_err());
        assert!(GuidanceConfig::new(1.0, 0.0).is_err());
        assert!(GuidanceConfig::new(1.0, 0.01).is_ok());
    }
}
