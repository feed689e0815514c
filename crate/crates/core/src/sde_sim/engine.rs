//! Streaming path engine shared by trajectory recording, first passage and couplings.

use super::rng::{channel, rng_stream, RngStream};
use super::{PathConfig, Scheme};
use crate::model_spaces::{geodesic_step, midpoint_rate, normalize_angle, radius_of, Base, BasePoint, SpaceSpec, Vec3};
use std::f64::consts::PI;

/// Clock rate `¼(αr)²`, `tanh²(r/2)` or `tan²(r/2)`.
#[inline]
pub(crate) fn clock_rate(base: Base, alpha: f64, r: f64) -> f64 {
    match base {
        Base::Euclidean => {
            let x = alpha * r;
            0.25 * x * x
        }
        Base::Hyperbolic => {
            let t = (0.5 * r).tanh();
            t * t
        }
        Base::Spherical => {
            let t = (0.5 * r.min(PI - 1e-9)).tan();
            t * t
        }
    }
}

#[inline]
fn area_coefficient(base: Base, r: f64) -> f64 {
    match base {
        Base::Euclidean => 0.5 * r,
        Base::Hyperbolic => (0.5 * r).tanh(),
        Base::Spherical => (0.5 * r.min(PI - 1e-9)).tan(),
    }
}

#[inline]
fn st_norm(p: &Vec3) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn embed(base: Base, r: f64, theta: f64) -> Vec3 {
    let (s, w) = match base {
        Base::Euclidean => (r, 0.0),
        Base::Hyperbolic => (r.sinh(), r.cosh()),
        Base::Spherical => (r.sin(), r.cos()),
    };
    let (sn, cs) = theta.sin_cos();
    [s * cs, s * sn, w]
}

pub(crate) struct PolarUpdate {
    pub r: f64,
    pub theta: f64,
    pub p: Vec3,
    /// Swept-area increment `c(r_mid)·ΔW2`, or the triangle area on the guarded path.
    pub area: f64,
}

/// One Euler–Maruyama step of the polar system, with the embedded pole guard.
pub(crate) fn polar_em_update(
    base: Base,
    r: f64,
    theta: f64,
    p: &Vec3,
    dw1: f64,
    dw2: f64,
    dt: f64,
    r_min: f64,
) -> PolarUpdate {
    let guard = r < r_min || (base == Base::Spherical && r > PI - r_min);
    if guard {
        let st = geodesic_step(base, p, st_norm(p), dw1, dw2, true);
        let r1 = radius_of(base, &st.next);
        let th = if st.next[0] == 0.0 && st.next[1] == 0.0 { 0.0 } else { st.next[1].atan2(st.next[0]) };
        return PolarUpdate { r: r1, theta: normalize_angle(th), p: st.next, area: st.area };
    }
    let (drift, g) = match base {
        Base::Euclidean => (0.5 / r, r),
        Base::Hyperbolic => (0.5 / r.tanh(), r.sinh()),
        Base::Spherical => (0.5 / r.tan(), r.sin()),
    };
    let mut r1 = r + dw1 + drift * dt;
    let mut th = theta + dw2 / g;
    if r1 < 0.0 {
        r1 = -r1;
        th += PI;
    }
    if base == Base::Spherical && r1 > PI {
        r1 = 2.0 * PI - r1;
        th += PI;
    }
    let th = normalize_angle(th);
    let area = area_coefficient(base, 0.5 * (r + r1)) * dw2;
    PolarUpdate { r: r1, theta: th, p: embed(base, r1, th), area }
}

/// One planar factor: base position, its swept area and its two drivers.
pub(crate) struct FactorWalker {
    base: Base,
    pub p: Vec3,
    pub prev: Vec3,
    /// Spatial norm of `p`.
    s: f64,
    /// Polar coordinates, kept current only by the polar scheme.
    r: f64,
    theta: f64,
    pub area: f64,
    rng_r: RngStream,
    rng_a: RngStream,
}

impl FactorWalker {
    pub(crate) fn new(base: Base, start: &BasePoint, seed: u64, path_index: u64, stage: u32, factor: u32) -> Self {
        let p = start.embedded();
        FactorWalker {
            base,
            p,
            prev: p,
            s: st_norm(&p),
            r: start.r(),
            theta: start.theta(),
            area: 0.0,
            rng_r: rng_stream(seed, path_index, channel::of(stage, factor, channel::RADIAL)),
            rng_a: rng_stream(seed, path_index, channel::of(stage, factor, channel::ANGULAR)),
        }
    }

    /// Advances one step and returns the clock rate at the step midpoint for
    /// weight `alpha`.
    #[inline]
    pub(crate) fn step(&mut self, scheme: Scheme, r_min: f64, sq: f64, dt: f64, alpha: f64, want_area: bool) -> f64 {
        let xi_r = sq * self.rng_r.gaussian();
        let xi_t = sq * self.rng_a.gaussian();
        self.prev = self.p;
        if scheme == Scheme::PolarEM {
            let r0 = self.r;
            let u = polar_em_update(self.base, r0, self.theta, &self.p, xi_r, xi_t, dt, r_min);
            self.p = u.p;
            self.s = st_norm(&u.p);
            self.r = u.r;
            self.theta = u.theta;
            self.area += u.area;
            clock_rate(self.base, alpha, 0.5 * (r0 + u.r))
        } else {
            let st = geodesic_step(self.base, &self.p, self.s, xi_r, xi_t, want_area);
            self.p = st.next;
            self.s = st.s_next;
            self.area += st.area;
            let rate = midpoint_rate(self.base, &self.prev, &self.p);
            if self.base == Base::Euclidean {
                alpha * alpha * rate
            } else {
                rate
            }
        }
    }

    pub fn radius(&self) -> f64 {
        radius_of(self.base, &self.p)
    }

    pub fn point(&self) -> BasePoint {
        BasePoint::from_embedded_unchecked(self.base, self.p)
    }
}

/// Increment of the vertical coordinate and clock over one step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Advance {
    pub t0: f64,
    pub t1: f64,
    pub z0: f64,
    pub z1: f64,
    pub s0: f64,
    pub s1: f64,
}

pub(crate) struct PathEngine {
    scheme: Scheme,
    r_min: f64,
    dt: f64,
    sqdt: f64,
    horizon: f64,
    pub n_steps: usize,
    pub walkers: Vec<FactorWalker>,
    weights: Vec<f64>,
    rng_v: Option<RngStream>,
    pub bridge: RngStream,
    pub step: usize,
    pub t: f64,
    z_start: f64,
    pub z_lift: f64,
    pub clock: f64,
}

pub(crate) fn n_steps(dt: f64, horizon: f64) -> usize {
    ((horizon / dt) - 1e-9).ceil().max(1.0) as usize
}

impl PathEngine {
    /// `starts` holds one base point per factor; `stage` separates the random streams
    /// of successive coupling stages.
    pub fn new(spec: &SpaceSpec, starts: &[BasePoint], z0: f64, cfg: &PathConfig, path_index: u64, stage: u32) -> Self {
        let weights = spec.factor_weights();
        debug_assert_eq!(starts.len(), weights.len());
        let walkers = starts
            .iter()
            .enumerate()
            .map(|(i, s)| FactorWalker::new(spec.base(), s, cfg.seed, path_index, stage, i as u32))
            .collect();
        let rng_v = (cfg.scheme == Scheme::BesselClock)
            .then(|| rng_stream(cfg.seed, path_index, channel::of(stage, 0, channel::VERTICAL)));
        PathEngine {
            scheme: cfg.scheme,
            r_min: cfg.r_min,
            dt: cfg.dt,
            sqdt: cfg.dt.sqrt(),
            horizon: cfg.horizon,
            n_steps: n_steps(cfg.dt, cfg.horizon),
            walkers,
            weights,
            rng_v,
            bridge: rng_stream(cfg.seed, path_index, channel::of(stage, 0, channel::BRIDGE)),
            step: 0,
            t: 0.0,
            z_start: z0,
            z_lift: z0,
            clock: 0.0,
        }
    }

    pub fn done(&self) -> bool {
        self.step >= self.n_steps
    }

    #[inline]
    pub fn advance(&mut self) -> Advance {
        let t0 = self.t;
        let t1 = if self.step + 1 >= self.n_steps { self.horizon } else { (self.step + 1) as f64 * self.dt };
        let h = t1 - t0;
        let sq = if h == self.dt { self.sqdt } else { h.sqrt() };
        let want_area = self.scheme != Scheme::BesselClock;
        let mut ds = 0.0;
        for (w, &alpha) in self.walkers.iter_mut().zip(&self.weights) {
            ds += w.step(self.scheme, self.r_min, sq, h, alpha, want_area) * h;
        }
        let z0 = self.z_lift;
        let z1 = match &mut self.rng_v {
            Some(v) => z0 + ds.sqrt() * v.gaussian(),
            None => self.z_start + self.walkers.iter().zip(&self.weights).map(|(w, a)| a * w.area).sum::<f64>(),
        };
        let s0 = self.clock;
        self.clock += ds;
        self.z_lift = z1;
        self.t = t1;
        self.step += 1;
        Advance { t0, t1, z0, z1, s0, s1: self.clock }
    }
}
