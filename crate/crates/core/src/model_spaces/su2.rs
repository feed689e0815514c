//! SU(2) as the unit sphere in ℝ⁴, in cylindrical coordinates `(r, θ, z)`.

use super::{normalize_angle, wrap_circle, SpaceError};

const DEAD_BAND: f64 = 1e-12;

/// Unit vector of ℝ⁴.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct R4Point([f64; 4]);

impl R4Point {
    pub fn new(x: [f64; 4]) -> Result<Self, SpaceError> {
        let n = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-8 {
            return Err(SpaceError::InvalidPoint(format!("R4 norm {n}")));
        }
        Ok(R4Point(x.map(|c| c / n)))
    }

    pub fn coords(&self) -> [f64; 4] {
        self.0
    }

    pub fn dot(&self, v: &[f64; 4]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Neg for R4Point {
    type Output = R4Point;
    fn neg(self) -> R4Point {
        R4Point(self.0.map(|c| -c))
    }
}

pub fn su2_cyl_to_r4(r: f64, theta: f64, z: f64) -> R4Point {
    let (sr, cr) = (0.5 * r).sin_cos();
    let (sz, cz) = (0.5 * z).sin_cos();
    let (sp, cp) = (theta - 0.5 * z).sin_cos();
    R4Point([cr * cz, cr * sz, sr * cp, sr * sp])
}

/// Inverse chart; at `r = π` the angle is set to `0` and `z` absorbs the phase.
pub fn su2_r4_to_cyl(p: &R4Point) -> (f64, f64, f64) {
    let [x1, x2, x3, x4] = p.0;
    let a = x1.hypot(x2);
    let b = x3.hypot(x4);
    let r = 2.0 * b.atan2(a);
    if a < 1e-15 {
        let z = wrap_circle(-2.0 * x4.atan2(x3));
        return (r, 0.0, z);
    }
    let z = wrap_circle(2.0 * x2.atan2(x1));
    let theta = if b < 1e-15 { 0.0 } else { normalize_angle(x4.atan2(x3) + 0.5 * z) };
    (r, theta, z)
}

/// Returns `(N_a, Ĥ_a)`: the normal of the equidistant great sphere `S_a` and
/// the unit vector `(cos(a/2), sin(a/2), 0, 0)`.
pub fn su2_equidistant_normal(a: f64) -> ([f64; 4], [f64; 4]) {
    let (s, c) = (0.5 * a).sin_cos();
    ([-s, c, 0.0, 0.0], [c, s, 0.0, 0.0])
}

/// Side of the equidistant great sphere `S_a`, signed by `⟨p, N_a⟩`.
///
/// `−1` is the open hemisphere `S_a^−` that contains `(0,0,0)`; it is exactly the
/// set of cylindrical points with `z ∈ (a − 2π, a)` off the fiber over `r = π`.
/// `0` is returned inside a `1e−12` dead band around `S_a`.
pub fn hemisphere_sign(a: f64, p: &R4Point) -> i8 {
    let (n, _) = su2_equidistant_normal(a);
    let d = p.dot(&n);
    if d.abs() < DEAD_BAND {
        0
    } else if d < 0.0 {
        -1
    } else {
        1
    }
}

/// The fiber-preserving isometry `T_b`.
pub fn su2_isometry_tb(b: f64) -> [[f64; 4]; 4] {
    let (s, c) = b.sin_cos();
    [[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, c, s], [0.0, 0.0, s, -c]]
}

pub fn apply_tb(b: f64, p: &R4Point) -> R4Point {
    let m = su2_isometry_tb(b);
    let x = p.0;
    R4Point(std::array::from_fn(|i| (0..4).map(|j| m[i][j] * x[j]).sum()))
}

/// Hopf projection onto the base sphere, in the same embedding as `BasePoint`.
pub fn hopf_projection(p: &R4Point) -> [f64; 3] {
    let [x1, x2, x3, x4] = p.0;
    // w1 = x1 + i x2, w2 = x3 + i x4; projection (2 w1 w2, |w1|² − |w2|²).
    [2.0 * (x1 * x3 - x2 * x4), 2.0 * (x1 * x4 + x2 * x3), x1 * x1 + x2 * x2 - x3 * x3 - x4 * x4]
}
