//! Level-set crossing detection for the (unwrapped) vertical coordinate.

use super::rng::RngStream;
use crate::model_spaces::{Fiber, SpaceSpec};
use std::f64::consts::TAU;

/// `{a}` on a line fiber; `{a, a − 2π}` on a circle fiber.
///
/// On the unwrapped lift the circle target is the lattice `a + 2πℤ`, so hitting it
/// is the exit of `z` from the lattice cell containing the start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSet {
    pub a: f64,
    pub circle: bool,
}

impl LevelSet {
    pub fn for_spec(spec: &SpaceSpec, a: f64) -> Self {
        LevelSet { a, circle: spec.fiber() == Fiber::Circle }
    }

    /// Whether an unwrapped value lies on the target.
    pub fn contains(&self, z: f64) -> bool {
        if self.circle {
            let k = ((z - self.a) / TAU).round();
            z == self.a + TAU * k
        } else {
            z == self.a
        }
    }

    /// Levels bracketing `z`: `(lower, upper)` with `lower ≤ z < upper` on a circle
    /// fiber, or the single level on a line fiber.
    fn bracket(&self, z: f64) -> (f64, f64) {
        if self.circle {
            let k = ((z - self.a) / TAU).floor();
            let lo = self.a + TAU * k;
            (lo, lo + TAU)
        } else if z < self.a {
            (f64::NEG_INFINITY, self.a)
        } else {
            (self.a, f64::INFINITY)
        }
    }

    /// Sub-step fraction of the first crossing within a step from `z0` to `z1`
    /// with clock increment `ds`, or `None`.
    ///
    /// Without a sign change the bridge test fires with the probability that a
    /// Brownian bridge of variance `ds` touches a level between the endpoints.
    pub fn crossing(&self, z0: f64, z1: f64, ds: f64, bridge: Option<&mut RngStream>) -> Option<f64> {
        if self.contains(z0) {
            return Some(0.0);
        }
        let (lo, hi) = self.bracket(z0);
        if z1 >= hi {
            return Some(((hi - z0) / (z1 - z0)).clamp(0.0, 1.0));
        }
        if z1 <= lo {
            return Some(((z0 - lo) / (z0 - z1)).clamp(0.0, 1.0));
        }
        let rng = bridge?;
        if ds <= 0.0 {
            return None;
        }
        let p_hi = bridge_touch(hi - z0, hi - z1, ds);
        let p_lo = bridge_touch(z0 - lo, z1 - lo, ds);
        let p = 1.0 - (1.0 - p_hi) * (1.0 - p_lo);
        if p <= 0.0 || rng.uniform() >= p {
            return None;
        }
        let (d0, d1) = if p_hi >= p_lo { (hi - z0, hi - z1) } else { (z0 - lo, z1 - lo) };
        Some(d0 / (d0 + d1))
    }
}

/// `exp(−2 d0 d1 / ds)`, flushed to zero below `e^{-40}`.
#[inline]
fn bridge_touch(d0: f64, d1: f64, ds: f64) -> f64 {
    let x = 2.0 * d0 * d1;
    if !x.is_finite() || x > 40.0 * ds {
        0.0
    } else {
        (-x / ds).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::super::rng::rng_stream;
    use super::*;

    #[test]
    fn line_crossings() {
        let l = LevelSet { a: 1.0, circle: false };
        assert_eq!(l.crossing(0.0, 2.0, 0.1, None), Some(0.5));
        assert_eq!(l.crossing(0.0, 1.0, 0.1, None), Some(1.0));
        assert_eq!(l.crossing(0.2, 0.5, 0.1, None), None);
        assert_eq!(l.crossing(1.0, 0.5, 0.1, None), Some(0.0));
        assert_eq!(l.crossing(3.0, 0.0, 0.1, None), Some(2.0 / 3.0));
    }

    #[test]
    fn circle_cells() {
        let a = 1.0;
        let l = LevelSet { a, circle: true };
        assert_eq!(l.crossing(0.0, 0.5, 0.1, None), None);
        let f = l.crossing(0.0, a - TAU - 1.0, 0.1, None).unwrap();
        assert!((f - (TAU - a) / (TAU - a + 1.0)).abs() < 1e-12);
        assert!(l.contains(a - TAU));
        assert!(l.crossing(a + TAU + 0.5, a + 2.0 * TAU, 0.1, None).is_some());
    }

    #[test]
    fn bridge_probability_matches_brownian_bridge_law() {
        // Bridge from 0 to 0 with variance 1 touches level 0.5 w.p. exp(-2·0.25).
        let l = LevelSet { a: 0.5, circle: false };
        let mut rng = rng_stream(3, 0, 0);
        let n = 200_000;
        let hits = (0..n).filter(|_| l.crossing(0.0, 0.0, 1.0, Some(&mut rng)).is_some()).count();
        let p = (-0.5f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se);
    }
}
