//! World-frame window model and the line-of-sight geometry between the
//! vehicle and the four window vertices.
//!
//! The world frame has its `x`–`z` plane parallel to the window, with `+y`
//! pointing through the window from the approach side. Vertices are ordered
//! `E1` top-left, `E2` top-right, `E3` bottom-right, `E4` bottom-left as seen
//! by an approaching vehicle, so `E1 -> E2` runs along `+x` and `E1 -> E4`
//! along `-z`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use thiserror::Error;

/// Position or velocity in the world frame.
pub type Vec3 = Vector3<f64>;

/// Ranges below this are treated as the vehicle sitting on a vertex.
pub const MIN_RANGE: f64 = 1e-6;

const PLANE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("degenerate geometry: vehicle within {range:.3e} m of vertex E{vertex}")]
    DegenerateGeometry { vertex: usize, range: f64 },
    #[error("range violation: vehicle at y = {y} is past the window plane y = {plane_y}")]
    RangeViolation { y: f64, plane_y: f64 },
    #[error("singular geometry: cos(alpha) = 0 with nonzero transverse velocity")]
    SingularGeometry,
    #[error("non-finite input")]
    NonFinite,
}

/// Rectangular window with vertices in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    vertices: [Vec3; 4],
    width: f64,
    height: f64,
    centroid: Vec3,
}

impl WindowSpec {
    /// Builds a window from its vertices in `E1..E4` order, validating
    /// coplanarity, axis alignment and orientation.
    pub fn new(e1: Vec3, e2: Vec3, e3: Vec3, e4: Vec3) -> Result<Self, GeometryError> {
        let vertices = [e1, e2, e3, e4];
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        let plane_y = e1.y;
        if vertices.iter().any(|v| (v.y - plane_y).abs() > PLANE_TOL) {
            return Err(GeometryError::InvalidWindow("vertices not coplanar".into()));
        }
        if (e1.z - e2.z).abs() > PLANE_TOL || (e4.z - e3.z).abs() > PLANE_TOL {
            return Err(GeometryError::InvalidWindow(
                "top and bottom edges must be horizontal".into(),
            ));
        }
        if (e1.x - e4.x).abs() > PLANE_TOL || (e2.x - e3.x).abs() > PLANE_TOL {
            return Err(GeometryError::InvalidWindow("side edges must be vertical".into()));
        }
        let width = e2.x - e1.x;
        let height = e1.z - e4.z;
        if width <= 0.0 {
            return Err(GeometryError::InvalidWindow(
                "E2 must lie along +x from E1 (width > 0)".into(),
            ));
        }
        if height <= 0.0 {
            return Err(GeometryError::InvalidWindow(
                "E4 must lie along -z from E1 (height > 0)".into(),
            ));
        }
        let centroid = (e1 + e2 + e3 + e4) / 4.0;
        Ok(Self {
            vertices,
            width,
            height,
            centroid,
        })
    }

    /// The 4 m x 3 m window used throughout the simulation study, centred
    /// at (14, 15, 11.5).
    pub fn reference() -> Self {
        Self::new(
            Vec3::new(12.0, 15.0, 13.0),
            Vec3::new(16.0, 15.0, 13.0),
            Vec3::new(16.0, 15.0, 10.0),
            Vec3::new(12.0, 15.0, 10.0),
        )
        .expect("reference window is valid")
    }

    pub fn vertices(&self) -> &[Vec3; 4] {
        &self.vertices
    }

    /// Vertex `E{index}` for `index` in `1..=4`.
    pub fn vertex(&self, index: usize) -> Vec3 {
        self.vertices[index - 1]
    }

    /// Edge length `E1E2`.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Edge length `E1E4`.
    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }

    /// Unit normal pointing into the window plane from the approach side.
    pub fn normal(&self) -> Vec3 {
        Vec3::y()
    }

    pub fn plane_y(&self) -> f64 {
        self.vertices[0].y
    }

    /// Whether a point on the window plane lies strictly inside the opening.
    pub fn contains(&self, point: &Vec3) -> bool {
        (point.x - self.centroid.x).abs() < self.width / 2.0 && (point.z - self.centroid.z).abs() < self.height / 2.0
    }

    /// Elevation of `E1` (and `E2`) seen from the centroid, `asin(b / sqrt(a² + b²))`.
    pub fn terminal_elevation(&self) -> f64 {
        (self.height / self.width.hypot(self.height)).asin()
    }
}

/// Elevation `alpha_i` and azimuth `beta_i` of the four vertices at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingSet {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
}

impl BearingSet {
    /// Bearings seen from the centroid of `window`.
    pub fn terminal(window: &WindowSpec) -> Self {
        let a = window.terminal_elevation();
        Self {
            alpha: [a, a, -a, -a],
            beta: [PI, 0.0, 0.0, PI],
        }
    }

    /// Checks the `alpha ∈ [-π/2, π/2]`, `beta ∈ [0, π]` contract.
    pub fn is_valid(&self) -> bool {
        self.alpha.iter().all(|a| a.is_finite() && a.abs() <= FRAC_PI_2)
            && self.beta.iter().all(|b| b.is_finite() && (0.0..=PI).contains(b))
    }
}

/// Line of sight from the vehicle to one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOfSight {
    pub range: f64,
    pub range_xy: f64,
    pub range_z: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LineOfSight {
    /// Vertex position reconstructed from the vehicle position and this
    /// range/bearing triple.
    pub fn vertex_from(&self, quad_pos: &Vec3) -> Vec3 {
        let horizontal = self.range * self.alpha.cos();
        quad_pos
            + Vec3::new(
                horizontal * self.beta.cos(),
                horizontal * self.beta.sin(),
                self.range * self.alpha.sin(),
            )
    }
}

fn check_finite(v: &Vec3) -> Result<(), GeometryError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}

/// Range and bearings to every vertex.
///
/// The azimuth uses the two-argument arctangent of `(y_i - y, x_i - x)`,
/// which lands in `[0, π]` whenever the vehicle is on the approach side or
/// on the window plane itself.
pub fn lines_of_sight(quad_pos: &Vec3, window: &WindowSpec) -> Result<[LineOfSight; 4], GeometryError> {
    check_finite(quad_pos)?;
    if quad_pos.y > window.plane_y() {
        return Err(GeometryError::RangeViolation {
            y: quad_pos.y,
            plane_y: window.plane_y(),
        });
    }
    let mut out = [LineOfSight {
        range: 0.0,
        range_xy: 0.0,
        range_z: 0.0,
        alpha: 0.0,
        beta: 0.0,
    }; 4];
    for (i, (vertex, los)) in window.vertices.iter().zip(out.iter_mut()).enumerate() {
        let d = vertex - quad_pos;
        let range = d.norm();
        if range < MIN_RANGE {
            return Err(GeometryError::DegenerateGeometry { vertex: i + 1, range });
        }
        let range_xy = d.x.hypot(d.y);
        // Clamp guards asin against |d.z / range| exceeding 1 by an ulp.
        let alpha = (d.z / range).clamp(-1.0, 1.0).asin();
        let beta = d.y.atan2(d.x);
        *los = LineOfSight {
            range,
            range_xy,
            range_z: d.z,
            alpha,
            beta,
        };
    }
    Ok(out)
}

/// Elevation and azimuth of the four vertices as seen from `quad_pos`.
pub fn bearing_angles(quad_pos: &Vec3, window: &WindowSpec) -> Result<BearingSet, GeometryError> {
    let los = lines_of_sight(quad_pos, window)?;
    let bearings = BearingSet {
        alpha: los.map(|l| l.alpha),
        beta: los.map(|l| l.beta),
    };
    if !bearings.is_valid() {
        return Err(GeometryError::RangeViolation {
            y: quad_pos.y,
            plane_y: window.plane_y(),
        });
    }
    Ok(bearings)
}

/// Vehicle speed and direction in flight-path/heading form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalVelocity {
    pub speed: f64,
    pub gamma: f64,
    pub chi: f64,
}

impl SphericalVelocity {
    pub fn to_cartesian(&self) -> Vec3 {
        let (sg, cg) = self.gamma.sin_cos();
        let (sc, cc) = self.chi.sin_cos();
        self.speed * Vec3::new(cg * cc, cg * sc, sg)
    }
}

/// Relative velocity of a vertex with respect to the vehicle, resolved
/// along and across the line of sight, with the implied angle rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeVelocity {
    pub v_r: f64,
    pub v_alpha: f64,
    pub v_beta: f64,
    pub alpha_rate: f64,
    pub beta_rate: f64,
}

/// Relative-motion kinematics of a stationary vertex seen from a vehicle
/// moving with `vel`.
pub fn relative_velocity(
    vel: &SphericalVelocity,
    alpha: f64,
    beta: f64,
    range: f64,
) -> Result<RelativeVelocity, GeometryError> {
    if !(vel.speed.is_finite() && alpha.is_finite() && beta.is_finite() && range.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if range < MIN_RANGE {
        return Err(GeometryError::DegenerateGeometry { vertex: 0, range });
    }
    let v = vel.speed;
    let (sg, cg) = vel.gamma.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    let (s_rel, c_rel) = (vel.chi - beta).sin_cos();

    let v_r = -v * (cg * ca * c_rel + sg * sa);
    let v_alpha = -v * (-cg * sa * c_rel + sg * ca);
    let v_beta = -v * cg * s_rel;

    let beta_rate = if ca.abs() < f64::EPSILON {
        if v_beta.abs() > f64::EPSILON {
            return Err(GeometryError::SingularGeometry);
        }
        0.0
    } else {
        v_beta / (range * ca)
    };
    Ok(RelativeVelocity {
        v_r,
        v_alpha,
        v_beta,
        alpha_rate: v_alpha / range,
        beta_rate,
    })
}

/// Horizontal and vertical offset from the centroid normal line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementState {
    pub dx: f64,
    pub dz: f64,
}

impl DisplacementState {
    pub fn distance(&self) -> f64 {
        self.dx.hypot(self.dz)
    }
}

/// Offsets from the centroid normal line computed from ranges and bearings
/// alone: `D_x` from the two top vertices and `D_z` from the two left ones.
pub fn displacements_from_los(los: &[LineOfSight; 4]) -> DisplacementState {
    let [l1, l2, _, l4] = los;
    DisplacementState {
        dx: -0.5 * (l1.range * l1.alpha.cos() * l1.beta.cos() + l2.range * l2.alpha.cos() * l2.beta.cos()),
        dz: -0.5 * (l1.range * l1.alpha.sin() + l4.range * l4.alpha.sin()),
    }
}

pub fn displacements(quad_pos: &Vec3, window: &WindowSpec) -> Result<DisplacementState, GeometryError> {
    Ok(displacements_from_los(&lines_of_sight(quad_pos, window)?))
}

/// One sample of the Lyapunov function `W = (D_x² + D_z²) / 2` and its
/// rate under ideal tracking of the issued command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSample {
    pub w: f64,
    pub w_dot: f64,
    pub t: f64,
}

pub fn lyapunov(disp: &DisplacementState, gamma_des: f64, chi_des: f64, speed: f64, t: f64) -> LyapunovSample {
    LyapunovSample {
        w: 0.5 * (disp.dx * disp.dx + disp.dz * disp.dz),
        w_dot: disp.dx * speed * gamma_des.cos() * chi_des.cos() + disp.dz * speed * gamma_des.sin(),
        t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn centroid_bearings() {
        let w = WindowSpec::reference();
        let b = bearing_angles(&w.centroid(), &w).unwrap();
        let a = (3.0f64 / 5.0).asin();
        assert_abs_diff_eq!(b.beta[0], PI, epsilon = 1e-15);
        assert_abs_diff_eq!(b.beta[3], PI, epsilon = 1e-15);
        assert_abs_diff_eq!(b.beta[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.beta[2], 0.0, epsilon = 1e-15);
        for (got, want) in b.alpha.iter().zip([a, a, -a, -a]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(a.to_degrees(), 36.87, epsilon = 1e-3);
        assert_eq!(b, BearingSet::terminal(&w));
    }

    #[test]
    fn origin_bearing_to_e1() {
        let w = WindowSpec::reference();
        let los = lines_of_sight(&Vec3::zeros(), &w).unwrap();
        assert_abs_diff_eq!(los[0].range, 23.194827009486403, epsilon = 1e-12);
        assert_abs_diff_eq!(los[0].beta.to_degrees(), 51.34019174590991, epsilon = 1e-10);
        assert_abs_diff_eq!(los[0].alpha.to_degrees(), 34.08829360669819, epsilon = 1e-10);
    }

    #[test]
    fn level_vertex_has_zero_elevation() {
        let w = WindowSpec::reference();
        let b = bearing_angles(&Vec3::new(0.0, 0.0, 13.0), &w).unwrap();
        assert_eq!(b.alpha[0], 0.0);
        assert_eq!(b.alpha[1], 0.0);
    }

    #[test]
    fn vertex_coincidence_is_degenerate() {
        let w = WindowSpec::reference();
        let err = bearing_angles(&w.vertex(3), &w).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateGeometry { vertex: 3, .. }));
    }

    #[test]
    fn past_plane_is_range_violation() {
        let w = WindowSpec::reference();
        let err = bearing_angles(&Vec3::new(14.0, 15.5, 11.5), &w).unwrap_err();
        assert!(matches!(err, GeometryError::RangeViolation { .. }));
    }

    #[test]
    fn window_validation() {
        let e = |x, y, z| Vec3::new(x, y, z);
        let bad_plane = WindowSpec::new(e(12., 15., 13.), e(16., 15.2, 13.), e(16., 15., 10.), e(12., 15., 10.));
        assert_eq!(
            bad_plane.unwrap_err(),
            GeometryError::InvalidWindow("vertices not coplanar".into())
        );
        // E1/E2 swapped
        assert!(WindowSpec::new(e(16., 15., 13.), e(12., 15., 13.), e(12., 15., 10.), e(16., 15., 10.)).is_err());
        // upside down
        assert!(WindowSpec::new(e(12., 15., 10.), e(16., 15., 10.), e(16., 15., 13.), e(12., 15., 13.)).is_err());
        let w = WindowSpec::reference();
        assert_eq!(w.width(), 4.0);
        assert_eq!(w.height(), 3.0);
        assert_eq!(w.centroid(), e(14., 15., 11.5));
        assert_eq!(w.normal(), Vec3::y());
    }

    #[test]
    fn relative_velocity_head_on() {
        let v = SphericalVelocity {
            speed: 2.0,
            gamma: 0.0,
            chi: 0.7,
        };
        let r = relative_velocity(&v, 0.0, 0.7, 5.0).unwrap();
        assert_abs_diff_eq!(r.v_r, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v_alpha, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v_beta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn relative_velocity_vertical_climb() {
        let v = SphericalVelocity {
            speed: 1.0,
            gamma: FRAC_PI_2,
            chi: 0.3,
        };
        let r = relative_velocity(&v, FRAC_PI_2, 1.1, 5.0).unwrap();
        assert_abs_diff_eq!(r.v_r, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v_alpha, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v_beta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn relative_velocity_oblique() {
        let v = SphericalVelocity {
            speed: 1.0,
            gamma: 0.0,
            chi: 0.0,
        };
        let r = relative_velocity(&v, deg(36.87), deg(51.34), 10.0).unwrap();
        assert_abs_diff_eq!(r.v_r, -0.4997574590604778, epsilon = 1e-12);
    }

    #[test]
    fn relative_velocity_singular() {
        let v = SphericalVelocity {
            speed: 1.0,
            gamma: 0.0,
            chi: 0.0,
        };
        let err = relative_velocity(&v, FRAC_PI_2, FRAC_PI_2, 3.0).unwrap_err();
        assert_eq!(err, GeometryError::SingularGeometry);
    }

    #[test]
    fn displacement_examples() {
        let w = WindowSpec::reference();
        let d = displacements(&w.centroid(), &w).unwrap();
        assert_abs_diff_eq!(d.dx, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dz, 0.0, epsilon = 1e-12);
        let d = displacements(&Vec3::zeros(), &w).unwrap();
        assert_abs_diff_eq!(d.dx, -14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dz, -11.5, epsilon = 1e-12);
        let d = displacements(&Vec3::new(16.0, 5.0, 10.0), &w).unwrap();
        assert_abs_diff_eq!(d.dx, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dz, -1.5, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_examples() {
        let zero = lyapunov(&DisplacementState { dx: 0.0, dz: 0.0 }, 0.3, 0.2, 1.0, 0.0);
        assert_eq!((zero.w, zero.w_dot), (0.0, 0.0));
        let d = DisplacementState { dx: -14.0, dz: -11.5 };
        let s = lyapunov(&d, 0.4, 0.9, 1.0, 2.0);
        assert_eq!(s.w, 164.125);
        assert!(s.w_dot < 0.0);
        assert_eq!(s.t, 2.0);
    }
}
