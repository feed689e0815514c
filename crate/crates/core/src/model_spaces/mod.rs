//! Geometry of the three base space forms and their fibered total spaces.
//!
//! Base points carry both polar coordinates `(r, θ)` about the origin and an
//! embedded vector `[x, y, w]`. The first two components are `s(r)·(cos θ, sin θ)`
//! with `s = r, sinh r, sin r`; `w` is the axial coordinate (`0`, `cosh r`, `cos r`).
//! On the hyperbolic plane `[x, y, w]` lies on the upper sheet `w² − x² − y² = 1`;
//! on the sphere the origin is the north pole `(0, 0, 1)`.

mod embedded;
mod omega;
mod su2;

pub(crate) use embedded::{
    geodesic_step, lorentz, midpoint_rate, radius_of, triangle_area, triangle_area3, Isometry, Vec3,
};
pub use omega::{homogeneous_norm_omega, OmegaPoint};
pub use su2::{
    apply_tb, hemisphere_sign, hopf_projection, su2_cyl_to_r4, su2_equidistant_normal, su2_isometry_tb, su2_r4_to_cyl,
    R4Point,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Circumference of a circle fiber.
pub const FIBER_PERIOD: f64 = 4.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("a spherical base with a line fiber is not a supported total space")]
    SphericalLine,
    #[error("weights are only allowed with a Euclidean base and a line fiber")]
    WeightsNotEuclidean,
    #[error("weights must be non-empty, finite, strictly positive and ascending")]
    InvalidWeights,
    #[error("invalid base point: {0}")]
    InvalidPoint(String),
    #[error("area rate is singular at the spherical pole r = pi")]
    PoleSingularity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Euclidean,
    Hyperbolic,
    Spherical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fiber {
    Line,
    Circle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawSpaceSpec {
    base: Base,
    fiber: Fiber,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

/// Total space selector: base curvature, fiber topology and optional symplectic weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpaceSpec", into = "RawSpaceSpec")]
pub struct SpaceSpec {
    base: Base,
    fiber: Fiber,
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawSpaceSpec> for SpaceSpec {
    type Error = SpaceError;
    fn try_from(raw: RawSpaceSpec) -> Result<Self, SpaceError> {
        SpaceSpec::new(raw.base, raw.fiber, raw.weights)
    }
}

impl From<SpaceSpec> for RawSpaceSpec {
    fn from(s: SpaceSpec) -> Self {
        RawSpaceSpec { base: s.base, fiber: s.fiber, weights: s.weights }
    }
}

impl SpaceSpec {
    pub fn new(base: Base, fiber: Fiber, weights: Option<Vec<f64>>) -> Result<Self, SpaceError> {
        if base == Base::Spherical && fiber == Fiber::Line {
            return Err(SpaceError::SphericalLine);
        }
        if let Some(w) = &weights {
            if base != Base::Euclidean || fiber != Fiber::Line {
                return Err(SpaceError::WeightsNotEuclidean);
            }
            let ok = !w.is_empty() && w.iter().all(|a| a.is_finite() && *a > 0.0) && w.windows(2).all(|p| p[0] <= p[1]);
            if !ok {
                return Err(SpaceError::InvalidWeights);
            }
        }
        Ok(SpaceSpec { base, fiber, weights })
    }

    /// The Heisenberg group.
    pub fn heisenberg() -> Self {
        SpaceSpec { base: Base::Euclidean, fiber: Fiber::Line, weights: None }
    }

    /// The non-isotropic Heisenberg group with weights `α₁ ≤ … ≤ α_n`.
    pub fn nonisotropic(weights: Vec<f64>) -> Result<Self, SpaceError> {
        SpaceSpec::new(Base::Euclidean, Fiber::Line, Some(weights))
    }

    /// The universal cover of SL(2).
    pub fn sl2_universal() -> Self {
        SpaceSpec { base: Base::Hyperbolic, fiber: Fiber::Line, weights: None }
    }

    pub fn sl2() -> Self {
        SpaceSpec { base: Base::Hyperbolic, fiber: Fiber::Circle, weights: None }
    }

    pub fn su2() -> Self {
        SpaceSpec { base: Base::Spherical, fiber: Fiber::Circle, weights: None }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Number of planar factors (1 unless weighted).
    pub fn n_factors(&self) -> usize {
        self.weights.as_ref().map_or(1, Vec::len)
    }

    /// Per-factor weights; `[1.0]` for the unweighted spaces.
    pub fn factor_weights(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0])
    }

    pub fn name(&self) -> &'static str {
        match (self.base, self.fiber, self.weights.is_some()) {
            (Base::Euclidean, Fiber::Line, false) => "heisenberg",
            (Base::Euclidean, Fiber::Line, true) => "nonisotropic-heisenberg",
            (Base::Hyperbolic, Fiber::Line, _) => "sl2-universal-cover",
            (Base::Hyperbolic, Fiber::Circle, _) => "sl2",
            (Base::Spherical, Fiber::Circle, _) => "su2",
            _ => "invalid",
        }
    }
}

/// Point of a base space form in polar and embedded form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePoint {
    base: Base,
    r: f64,
    theta: f64,
    v: Vec3,
}

pub(crate) fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl BasePoint {
    pub fn origin(base: Base) -> Self {
        let w = if base == Base::Euclidean { 0.0 } else { 1.0 };
        BasePoint { base, r: 0.0, theta: 0.0, v: [0.0, 0.0, w] }
    }

    pub fn from_polar(base: Base, r: f64, theta: f64) -> Result<Self, SpaceError> {
        if !r.is_finite() || !theta.is_finite() || r < 0.0 {
            return Err(SpaceError::InvalidPoint(format!("radius {r}, angle {theta}")));
        }
        if base == Base::Spherical && r > PI {
            return Err(SpaceError::InvalidPoint(format!("spherical radius {r} exceeds pi")));
        }
        let theta = normalize_angle(theta);
        let (s, w) = match base {
            Base::Euclidean => (r, 0.0),
            Base::Hyperbolic => (r.sinh(), r.cosh()),
            Base::Spherical => (r.sin(), r.cos()),
        };
        let (sn, cs) = theta.sin_cos();
        Ok(BasePoint { base, r, theta, v: [s * cs, s * sn, w] })
    }

    /// Builds a point from its embedded vector, projecting away rounding noise.
    pub fn from_embedded(base: Base, v: [f64; 3]) -> Result<Self, SpaceError> {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(SpaceError::InvalidPoint(format!("{v:?}")));
        }
        match base {
            Base::Euclidean => {
                if v[2] != 0.0 {
                    return Err(SpaceError::InvalidPoint("planar point with w != 0".into()));
                }
            }
            Base::Spherical => {
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if (n - 1.0).abs() > 1e-8 {
                    return Err(SpaceError::InvalidPoint(format!("norm {n} off the sphere")));
                }
            }
            Base::Hyperbolic => {
                let q = v[2] * v[2] - v[0] * v[0] - v[1] * v[1];
                if v[2] < 1.0 - 1e-8 || (q - 1.0).abs() > 1e-8 * v[2] * v[2] {
                    return Err(SpaceError::InvalidPoint(format!("{v:?} off the hyperboloid")));
                }
            }
        }
        Ok(Self::from_embedded_unchecked(base, v))
    }

    pub(crate) fn from_embedded_unchecked(base: Base, mut v: Vec3) -> Self {
        embedded::renormalize(base, &mut v);
        let r = radius_of(base, &v);
        let theta = if v[0] == 0.0 && v[1] == 0.0 { 0.0 } else { normalize_angle(v[1].atan2(v[0])) };
        BasePoint { base, r, theta, v }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    /// Geodesic distance to the origin.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Polar angle in `[0, 2π)`; `0` at the origin by convention.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Embedded vector `[x, y, w]`.
    pub fn embedded(&self) -> [f64; 3] {
        self.v
    }
}

/// Point of a total space: base point plus vertical coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TotalPoint {
    pub base: BasePoint,
    pub z: f64,
}

impl TotalPoint {
    /// Wraps `z` for circle fibers.
    pub fn new(spec: &SpaceSpec, base: BasePoint, z: f64) -> Self {
        TotalPoint { base, z: wrap_fiber(spec, z) }
    }

    pub fn origin(spec: &SpaceSpec) -> Self {
        TotalPoint { base: BasePoint::origin(spec.base()), z: 0.0 }
    }
}

/// Reflection across the geodesic through the origin at angle `axis_angle`.
pub fn reflect_base(_spec: &SpaceSpec, axis_angle: f64, p: &BasePoint) -> BasePoint {
    let (s2, c2) = (2.0 * axis_angle).sin_cos();
    let [x, y, w] = p.v;
    BasePoint {
        base: p.base,
        r: p.r,
        theta: normalize_angle(2.0 * axis_angle - p.theta),
        v: [c2 * x + s2 * y, s2 * x - c2 * y, w],
    }
}

/// Geodesic distance between two base points.
pub fn base_distance(spec: &SpaceSpec, p: &BasePoint, q: &BasePoint) -> f64 {
    let (a, b) = (p.v, q.v);
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    match spec.base() {
        Base::Euclidean => d[0].hypot(d[1]),
        Base::Spherical => {
            let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            let cross = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            cross.atan2(a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
        }
        Base::Hyperbolic => {
            // Chord form: <p−q, p−q> = 4 sinh²(d/2).
            let chord = lorentz(&d, &d).max(0.0).sqrt();
            2.0 * (0.5 * chord).asinh()
        }
    }
}

/// Clock rate of the time-changed vertical Brownian motion at radius `r`.
///
/// For weighted specs this is the rate of a unit-weight factor.
pub fn area_rate(spec: &SpaceSpec, r: f64) -> Result<f64, SpaceError> {
    match spec.base() {
        Base::Euclidean => Ok(0.25 * r * r),
        Base::Hyperbolic => Ok((0.5 * r).tanh().powi(2)),
        Base::Spherical => {
            if r >= PI {
                Err(SpaceError::PoleSingularity)
            } else {
                Ok((0.5 * r).tan().powi(2))
            }
        }
    }
}

/// Signed area of the geodesic triangle (origin, `p_prev`, `p_next`).
pub fn swept_area_increment(spec: &SpaceSpec, p_prev: &BasePoint, p_next: &BasePoint) -> f64 {
    embedded::triangle_area(spec.base(), &p_prev.v, &p_next.v)
}

/// Reduces `z` into `(−2π, 2π]` on circle fibers; identity on lines.
pub fn wrap_fiber(spec: &SpaceSpec, z: f64) -> f64 {
    match spec.fiber() {
        Fiber::Line => z,
        Fiber::Circle => wrap_circle(z),
    }
}

pub(crate) fn wrap_circle(z: f64) -> f64 {
    let mut w = z - FIBER_PERIOD * (z / FIBER_PERIOD).round();
    if w <= -PI * 2.0 {
        w += FIBER_PERIOD;
    } else if w > PI * 2.0 {
        w -= FIBER_PERIOD;
    }
    w
}
