//! Embedded-coordinate kernels shared by geometry routines and the path stepper.

use super::Base;

pub(crate) type Vec3 = [f64; 3];

/// Minkowski form with the axial coordinate as the timelike direction.
#[inline]
pub(crate) fn lorentz(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

#[inline]
fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn radius_of(base: Base, v: &Vec3) -> f64 {
    let s = (v[0] * v[0] + v[1] * v[1]).sqrt();
    match base {
        Base::Euclidean => s,
        Base::Hyperbolic => s.asinh(),
        Base::Spherical => s.atan2(v[2]),
    }
}

/// Projects back onto the model surface.
#[inline]
pub(crate) fn renormalize(base: Base, v: &mut Vec3) {
    match base {
        Base::Euclidean => v[2] = 0.0,
        Base::Hyperbolic => v[2] = (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt(),
        Base::Spherical => {
            let n = dot(v, v).sqrt();
            v.iter_mut().for_each(|c| *c /= n);
        }
    }
}

/// `(cos L, sin L / L)` or the hyperbolic analogue, from `L²`.
#[inline]
fn exp_coefficients(base: Base, l2: f64) -> (f64, f64) {
    let sign = match base {
        Base::Euclidean => return (1.0, 1.0),
        Base::Hyperbolic => 1.0,
        Base::Spherical => -1.0,
    };
    if l2 < 1e-2 {
        let x = sign * l2;
        let c = 1.0 + x * (0.5 + x * (1.0 / 24.0 + x * (1.0 / 720.0 + x / 40320.0)));
        let s = 1.0 + x * (1.0 / 6.0 + x * (1.0 / 120.0 + x * (1.0 / 5040.0 + x / 362880.0)));
        (c, s)
    } else {
        let l = l2.sqrt();
        if sign > 0.0 {
            (l.cosh(), l.sinh() / l)
        } else {
            (l.cos(), l.sin() / l)
        }
    }
}

/// Result of one geodesic step from `p` along `ξ_r e_r + ξ_θ e_θ`.
pub(crate) struct GeodesicStep {
    pub next: Vec3,
    /// Spatial norm `s(r)` of `next`.
    pub s_next: f64,
    /// Signed area of the triangle (origin, p, next).
    pub area: f64,
}

/// `2·atan2(y, x)` with a series fast path for thin triangles.
#[inline]
fn double_atan2(y: f64, x: f64) -> f64 {
    if x > 0.0 && y.abs() < 0.05 * x {
        let q = y / x;
        let q2 = q * q;
        2.0 * q * (1.0 - q2 * (1.0 / 3.0 - q2 * (0.2 - q2 * (1.0 / 7.0 - q2 * (1.0 / 9.0 - q2 / 11.0)))))
    } else {
        2.0 * y.atan2(x)
    }
}

/// Exponential-map step in the polar orthonormal frame at `p`; `s` is the
/// spatial norm of `p`.
///
/// The triangle area is evaluated from the step data rather than from the two
/// endpoints, which avoids cancellation far from the origin.
#[inline]
pub(crate) fn geodesic_step(base: Base, p: &Vec3, s: f64, xi_r: f64, xi_t: f64, want_area: bool) -> GeodesicStep {
    let (u0, u1) = if s > 0.0 { (p[0] / s, p[1] / s) } else { (1.0, 0.0) };
    if base == Base::Euclidean {
        let next = [p[0] + xi_r * u0 - xi_t * u1, p[1] + xi_r * u1 + xi_t * u0, 0.0];
        let s_next = (next[0] * next[0] + next[1] * next[1]).sqrt();
        return GeodesicStep { next, s_next, area: 0.5 * s * xi_t };
    }
    let w = p[2];
    let er2 = if base == Base::Hyperbolic { s } else { -s };
    let tang = [xi_r * w * u0 - xi_t * u1, xi_r * w * u1 + xi_t * u0, xi_r * er2];
    let l2 = xi_r * xi_r + xi_t * xi_t;
    let (c, sl) = exp_coefficients(base, l2);
    let mut next = [c * p[0] + sl * tang[0], c * p[1] + sl * tang[1], c * p[2] + sl * tang[2]];
    renormalize(base, &mut next);
    let s_next = (next[0] * next[0] + next[1] * next[1]).sqrt();
    // det[O, p, next] = sl·s·ξ_θ and the side opposite the origin has length L.
    let area = if want_area { double_atan2(sl * s * xi_t, 1.0 + p[2] + next[2] + c) } else { 0.0 };
    GeodesicStep { next, s_next, area }
}

/// Squared area coefficient `c²` (`r²/4`, `tanh²(r/2)`, `tan²(r/2)`) at the
/// geodesic midpoint of `p` and `q`.
#[inline]
pub(crate) fn midpoint_rate(base: Base, p: &Vec3, q: &Vec3) -> f64 {
    let m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
    let s2 = m[0] * m[0] + m[1] * m[1];
    match base {
        Base::Euclidean => 0.0625 * s2,
        // c = s/(1 + w) on the unit model, applied to the rescaled midpoint.
        Base::Spherical => {
            let d = (s2 + m[2] * m[2]).sqrt() + m[2];
            s2 / (d * d)
        }
        Base::Hyperbolic => {
            let d = (m[2] * m[2] - s2).max(0.0).sqrt() + m[2];
            s2 / (d * d)
        }
    }
}

/// Signed area of the geodesic triangle (origin, p, q).
pub(crate) fn triangle_area(base: Base, p: &Vec3, q: &Vec3) -> f64 {
    let det = p[0] * q[1] - p[1] * q[0];
    match base {
        Base::Euclidean => 0.5 * det,
        Base::Spherical => 2.0 * det.atan2(1.0 + p[2] + q[2] + dot(p, q)),
        Base::Hyperbolic => 2.0 * det.atan2(1.0 + p[2] + q[2] - lorentz(p, q)),
    }
}

/// Signed area of the geodesic triangle `(a, b, c)`.
///
/// The curved cases use `tan(A/2) = det[a, b, c] / (1 + ⟨a,b⟩ + ⟨b,c⟩ + ⟨c,a⟩)` with
/// the model's bilinear form, which is invariant under the isometry group.
pub(crate) fn triangle_area3(base: Base, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    if base == Base::Euclidean {
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
    }
    let det =
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
    let denom = match base {
        Base::Spherical => 1.0 + dot(a, b) + dot(b, c) + dot(c, a),
        _ => 1.0 - lorentz(a, b) - lorentz(b, c) - lorentz(c, a),
    };
    2.0 * det.atan2(denom)
}

/// Point at fraction `f` along the geodesic from `p` to `q`.
#[cfg(test)]
pub(crate) fn geodesic_interpolate(base: Base, p: &Vec3, q: &Vec3, f: f64) -> Vec3 {
    let mut out = match base {
        Base::Euclidean => [p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1]), 0.0],
        Base::Spherical => {
            let th = dot(p, q).clamp(-1.0, 1.0).acos();
            let (a, b) = ((((1.0 - f) * th).sin()) / th.sin(), (f * th).sin() / th.sin());
            [a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]]
        }
        Base::Hyperbolic => {
            let d = (-lorentz(p, q)).max(1.0).acosh();
            let (a, b) = ((((1.0 - f) * d).sinh()) / d.sinh(), (f * d).sinh() / d.sinh());
            [a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]]
        }
    };
    renormalize(base, &mut out);
    out
}

/// Isometry taking the origin to a given point (translation, rotation or boost).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Isometry {
    base: Base,
    m: [[f64; 3]; 3],
    shift: [f64; 2],
}

impl Isometry {
    pub(crate) fn from_origin_to(base: Base, target: &Vec3) -> Self {
        let s = target[0].hypot(target[1]);
        let (u0, u1) = if s > 0.0 { (target[0] / s, target[1] / s) } else { (1.0, 0.0) };
        let mut m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut shift = [0.0; 2];
        match base {
            Base::Euclidean => shift = [target[0], target[1]],
            Base::Spherical => {
                let k = 1.0 - target[2];
                m = [
                    [1.0 - k * u0 * u0, -k * u0 * u1, s * u0],
                    [-k * u0 * u1, 1.0 - k * u1 * u1, s * u1],
                    [-s * u0, -s * u1, target[2]],
                ];
            }
            Base::Hyperbolic => {
                let k = target[2] - 1.0;
                m = [
                    [1.0 + k * u0 * u0, k * u0 * u1, s * u0],
                    [k * u0 * u1, 1.0 + k * u1 * u1, s * u1],
                    [s * u0, s * u1, target[2]],
                ];
            }
        }
        Isometry { base, m, shift }
    }

    pub(crate) fn apply(&self, v: &Vec3) -> Vec3 {
        if self.base == Base::Euclidean {
            return [v[0] + self.shift[0], v[1] + self.shift[1], 0.0];
        }
        let m = &self.m;
        let mut out = [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ];
        renormalize(self.base, &mut out);
        out
    }
}
