//! Mirror coupling of the base Brownian motions across the bisector of their starts.

use super::{require_path_scheme, CouplingError};
use crate::model_spaces::{
    lorentz, triangle_area, triangle_area3, wrap_fiber, Base, BasePoint, SpaceSpec, TotalPoint, Vec3,
};
use crate::sde_sim::{channel, rng_stream, FactorWalker, LevelSet, PathConfig};
use serde::Serialize;

/// Equidistant geodesic of two base points, with the reflection that swaps them.
#[derive(Clone, Copy, Debug)]
pub struct Bisector {
    base: Base,
    /// Unit normal: Euclidean in the plane or on the sphere, spacelike for the hyperboloid.
    n: Vec3,
    /// Offset of the Euclidean bisector line.
    c: f64,
}

impl Bisector {
    /// Bisector of `p` and `q`; `p` lies on the positive side.
    pub fn new(p: &BasePoint, q: &BasePoint) -> Result<Self, CouplingError> {
        if p.base() != q.base() {
            return Err(CouplingError::Invalid("points on different base spaces".into()));
        }
        let base = p.base();
        let (a, b) = (p.embedded(), q.embedded());
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        let norm2 = match base {
            Base::Euclidean => d[0] * d[0] + d[1] * d[1],
            Base::Spherical => d[0] * d[0] + d[1] * d[1] + d[2] * d[2],
            Base::Hyperbolic => lorentz(&d, &d),
        };
        if !(norm2 > 1e-24) {
            return Err(CouplingError::Invalid("mirror coupling needs distinct base points".into()));
        }
        let k = norm2.sqrt();
        let n = [d[0] / k, d[1] / k, if base == Base::Euclidean { 0.0 } else { d[2] / k }];
        let c = if base == Base::Euclidean { 0.5 * (n[0] * (a[0] + b[0]) + n[1] * (a[1] + b[1])) } else { 0.0 };
        Ok(Bisector { base, n, c })
    }

    #[inline]
    fn form(&self, v: &Vec3) -> f64 {
        match self.base {
            Base::Euclidean => self.n[0] * v[0] + self.n[1] * v[1] - self.c,
            Base::Spherical => self.n[0] * v[0] + self.n[1] * v[1] + self.n[2] * v[2],
            Base::Hyperbolic => lorentz(&self.n, v),
        }
    }

    #[inline]
    pub(crate) fn rho(&self, v: &Vec3) -> f64 {
        let f = self.form(v);
        match self.base {
            Base::Euclidean => f,
            Base::Spherical => f.clamp(-1.0, 1.0).asin(),
            Base::Hyperbolic => f.asinh(),
        }
    }

    pub(crate) fn reflect_vec(&self, v: &Vec3) -> Vec3 {
        let f = 2.0 * self.form(v);
        [v[0] - f * self.n[0], v[1] - f * self.n[1], v[2] - f * self.n[2]]
    }

    /// Signed geodesic distance to the bisector, positive on the side of `p`.
    pub fn signed_distance(&self, x: &BasePoint) -> f64 {
        self.rho(&x.embedded())
    }

    pub fn reflect(&self, x: &BasePoint) -> BasePoint {
        BasePoint::from_embedded_unchecked(self.base, self.reflect_vec(&x.embedded()))
    }
}

/// End state of the mirror stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HorizontalOutcome {
    pub coupled: bool,
    /// `σ'` when coupled; otherwise the time the run stopped.
    pub meeting_time: f64,
    pub truncated: bool,
    /// Hyperbolic run abandoned beyond the escape distance.
    pub escaped: bool,
    #[serde(skip)]
    pub primary: TotalPoint,
    #[serde(skip)]
    pub partner: TotalPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MirrorOutcome {
    pub horizontal: HorizontalOutcome,
    /// `z̃ − z` at the meeting, reduced to `(−2π, 2π]` on circle fibers.
    pub displacement: Option<f64>,
}

/// Runs the primary base path and reflects it across the bisector until the two meet.
///
/// Meeting is the sign change of the signed distance `ρ`, or a Brownian-bridge
/// touch of zero between grid points. The partner's vertical coordinate follows
/// from the primary's by additivity of signed area: with `T(x)` the area of the
/// triangle `(R o, o, x)`, `z̃ − z̃₀ = −(z − z₀) − α(T(x) − T(x₀))`. At the
/// meeting the partner is moved the remaining `2|ρ|` along the geodesic onto the
/// primary, picking up the area of that segment.
///
/// On hyperbolic bases the step grows to `dt·min(ρ², 100)` away from the
/// bisector and the run stops once `ρ` exceeds the escape distance.
pub(crate) fn mirror_run(
    spec: &SpaceSpec,
    start1: &TotalPoint,
    start2: &TotalPoint,
    cfg: &PathConfig,
    path_index: u64,
    stage: u32,
) -> Result<HorizontalOutcome, CouplingError> {
    cfg.validate()?;
    require_path_scheme(cfg.scheme)?;
    if spec.n_factors() != 1 {
        return Err(CouplingError::Invalid("mirror coupling acts on a single planar factor".into()));
    }
    let base = spec.base();
    if start1.base.base() != base || start2.base.base() != base {
        return Err(CouplingError::Invalid("start points do not match the space".into()));
    }
    let bis = Bisector::new(&start1.base, &start2.base)?;
    let alpha = spec.factor_weights()[0];
    let hyperbolic = base == Base::Hyperbolic;
    let origin = BasePoint::origin(base).embedded();
    let mirrored_origin = bis.reflect_vec(&origin);
    let t_area = |x: &Vec3| triangle_area3(base, &mirrored_origin, &origin, x);
    let x0 = start1.base.embedded();
    let mut walker = FactorWalker::new(base, &start1.base, cfg.seed, path_index, stage, 0);
    let mut bridge = rng_stream(cfg.seed, path_index, channel::of(stage, 0, channel::BRIDGE));
    let level = LevelSet { a: 0.0, circle: false };
    let mut rho = bis.rho(&x0);
    let mut t = 0.0;
    let mut step = 0usize;
    let (mut coupled, mut escaped) = (false, false);
    let mut meeting_time = cfg.horizon;
    while cfg.horizon - t > 1e-12 * cfg.horizon.max(1.0) {
        let mut h = cfg.dt;
        if hyperbolic {
            h *= (rho * rho).clamp(1.0, 100.0);
        }
        let last = cfg.horizon - t <= h * (1.0 + 1e-9);
        if last {
            h = cfg.horizon - t;
        }
        walker.step(cfg.scheme, cfg.r_min, h.sqrt(), h, alpha, true);
        step += 1;
        let rho1 = bis.rho(&walker.p);
        let b = cfg.bridge_correction.then_some(&mut bridge);
        if let Some(f) = level.crossing(rho, rho1, h, b) {
            coupled = true;
            meeting_time = t + f * h;
            break;
        }
        // Grid times stay exact multiples of dt when the step is fixed.
        t = if last {
            cfg.horizon
        } else if hyperbolic {
            t + h
        } else {
            step as f64 * cfg.dt
        };
        rho = rho1;
        if hyperbolic && rho > cfg.escape_distance {
            escaped = true;
            meeting_time = t;
            break;
        }
    }
    let x = walker.p;
    let z = start1.z + alpha * walker.area;
    let mut xt = bis.reflect_vec(&x);
    let mut zt = start2.z - alpha * walker.area - alpha * (t_area(&x) - t_area(&x0));
    if coupled {
        zt += alpha * triangle_area(base, &xt, &x);
        xt = x;
    }
    Ok(HorizontalOutcome {
        coupled,
        meeting_time,
        truncated: !coupled && !escaped,
        escaped,
        primary: TotalPoint::new(spec, BasePoint::from_embedded_unchecked(base, x), wrap_fiber(spec, z)),
        partner: TotalPoint::new(spec, BasePoint::from_embedded_unchecked(base, xt), wrap_fiber(spec, zt)),
    })
}

/// Mirror coupling of base Brownian motions from `p` and `q`, both lifted at `z = 0`.
pub fn mirror_horizontal_coupling(
    spec: &SpaceSpec,
    p: &BasePoint,
    q: &BasePoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<MirrorOutcome, CouplingError> {
    let h = mirror_run(spec, &TotalPoint::new(spec, *p, 0.0), &TotalPoint::new(spec, *q, 0.0), cfg, path_index, 0)?;
    let displacement = h.coupled.then(|| wrap_fiber(spec, h.partner.z - h.primary.z));
    Ok(MirrorOutcome { horizontal: h, displacement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{hyperbolic_success_prob, normal_cdf, Estimate};
    use crate::model_spaces::base_distance;
    use crate::sde_sim::{run_batch, Scheme};
    use std::f64::consts::PI;

    #[test]
    fn bisector_geometry() {
        for (spec, r) in [(SpaceSpec::heisenberg(), 1.3), (SpaceSpec::sl2(), 0.8), (SpaceSpec::su2(), 1.1)] {
            let p = BasePoint::from_polar(spec.base(), r, 0.4).unwrap();
            let q = BasePoint::from_polar(spec.base(), 0.5 * r, 2.9).unwrap();
            let bis = Bisector::new(&p, &q).unwrap();
            let d = base_distance(&spec, &p, &q);
            assert!((bis.signed_distance(&p) - 0.5 * d).abs() < 1e-12, "{}", spec.name());
            assert!((bis.signed_distance(&q) + 0.5 * d).abs() < 1e-12);
            let rp = bis.reflect(&p).embedded();
            assert!((0..3).all(|i| (rp[i] - q.embedded()[i]).abs() < 1e-12));
            let x = BasePoint::from_polar(spec.base(), 0.7, 5.0).unwrap();
            let y = BasePoint::from_polar(spec.base(), 0.2, 1.0).unwrap();
            let (rx, ry) = (bis.reflect(&x), bis.reflect(&y));
            assert!((base_distance(&spec, &rx, &ry) - base_distance(&spec, &x, &y)).abs() < 1e-12);
            assert!((bis.signed_distance(&rx) + bis.signed_distance(&x)).abs() < 1e-12);
        }
        let o = BasePoint::origin(Base::Euclidean);
        assert!(Bisector::new(&o, &o).is_err());
    }

    /// Partner area summed step by step along the reflected path, with the same
    /// step-size rule as the coupling.
    fn direct_partner_z(spec: &SpaceSpec, p: &BasePoint, q: &BasePoint, cfg: &PathConfig, idx: u64) -> f64 {
        let bis = Bisector::new(p, q).unwrap();
        let mut w = FactorWalker::new(spec.base(), p, cfg.seed, idx, 0, 0);
        let (mut z, mut t) = (0.0, 0.0);
        while t < cfg.horizon - 1e-12 {
            let rho = bis.rho(&w.p);
            let mut h = if spec.base() == Base::Hyperbolic { cfg.dt * (rho * rho).clamp(1.0, 100.0) } else { cfg.dt };
            if cfg.horizon - t <= h * (1.0 + 1e-9) {
                h = cfg.horizon - t;
            }
            w.step(cfg.scheme, cfg.r_min, h.sqrt(), h, 1.0, true);
            z += triangle_area(spec.base(), &bis.reflect_vec(&w.prev), &bis.reflect_vec(&w.p));
            t += h;
        }
        z
    }

    #[test]
    fn partner_area_telescopes() {
        for spec in [SpaceSpec::heisenberg(), SpaceSpec::sl2_universal(), SpaceSpec::su2()] {
            let p = BasePoint::from_polar(spec.base(), 1.2, 0.3).unwrap();
            let q = BasePoint::from_polar(spec.base(), 0.9, 2.5).unwrap();
            // Far enough apart that the short runs do not meet.
            let cfg = PathConfig::new(1e-3, 0.05, 6);
            for i in 0..5 {
                let m = mirror_horizontal_coupling(&spec, &p, &q, &cfg, i).unwrap();
                assert!(!m.horizontal.coupled);
                let direct = direct_partner_z(&spec, &p, &q, &cfg, i);
                assert!((m.horizontal.partner.z - wrap_fiber(&spec, direct)).abs() < 1e-9, "{}", spec.name());
                let rp = Bisector::new(&p, &q).unwrap().reflect(&m.horizontal.primary.base);
                assert_eq!(rp.embedded(), m.horizontal.partner.base.embedded());
            }
        }
    }

    #[test]
    fn euclidean_meeting_time_law() {
        let spec = SpaceSpec::heisenberg();
        let h = 0.5;
        let p = BasePoint::from_polar(Base::Euclidean, h, 0.0).unwrap();
        let q = BasePoint::from_polar(Base::Euclidean, h, PI).unwrap();
        let cfg = PathConfig::new(1e-3, 2.0, 14);
        let n = 20_000;
        let out = run_batch(n, |i| mirror_horizontal_coupling(&spec, &p, &q, &cfg, i).unwrap());
        for &t in &[0.5, 1.0, 2.0] {
            let k = out.iter().filter(|m| !m.horizontal.coupled || m.horizontal.meeting_time > t).count();
            let e = Estimate::proportion(k, n as usize);
            let exact = 2.0 * normal_cdf(h / t.sqrt()) - 1.0;
            assert!((e.value - exact).abs() <= 3.0 * e.se, "t={t}: {} vs {exact}", e.value);
        }
        for m in out.iter().filter(|m| m.horizontal.coupled) {
            assert_eq!(m.horizontal.primary.base, m.horizontal.partner.base);
        }
    }

    #[test]
    fn hyperbolic_success_frequency() {
        let spec = SpaceSpec::sl2_universal();
        let r = 1.0;
        let p = BasePoint::from_polar(Base::Hyperbolic, r, 0.0).unwrap();
        let q = BasePoint::from_polar(Base::Hyperbolic, r, PI).unwrap();
        let cfg = PathConfig::new(1e-3, 400.0, 2);
        let n = 10_000;
        let out = run_batch(n, |i| mirror_horizontal_coupling(&spec, &p, &q, &cfg, i).unwrap().horizontal);
        let k = out.iter().filter(|h| h.coupled).count();
        let freq = k as f64 / n as f64;
        assert!((freq - hyperbolic_success_prob(r)).abs() < 0.02, "{freq}");
        assert!(out.iter().all(|h| h.coupled || h.escaped || h.truncated));
    }

    #[test]
    fn sphere_mirror_always_meets() {
        let spec = SpaceSpec::su2();
        let p = BasePoint::from_polar(Base::Spherical, 0.5 * PI, 0.0).unwrap();
        let q = BasePoint::from_polar(Base::Spherical, 0.5 * PI, PI).unwrap();
        let cfg = PathConfig::new(1e-3, 20.0, 3);
        let out = run_batch(400, |i| mirror_horizontal_coupling(&spec, &p, &q, &cfg, i).unwrap());
        let met = out.iter().filter(|m| m.horizontal.coupled).count();
        assert!(met >= 396, "{met}");
        for m in out.iter().filter(|m| m.horizontal.coupled) {
            let d = m.displacement.unwrap();
            assert!(d > -2.0 * PI && d <= 2.0 * PI);
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        let spec = SpaceSpec::heisenberg();
        let p = BasePoint::from_polar(Base::Euclidean, 1.0, 0.0).unwrap();
        let cfg = PathConfig::new(1e-3, 1.0, 0);
        assert!(mirror_horizontal_coupling(&spec, &p, &p, &cfg, 0).is_err());
        let q = BasePoint::origin(Base::Euclidean);
        let bessel = cfg.clone().with_scheme(Scheme::BesselClock);
        assert!(mirror_horizontal_coupling(&spec, &p, &q, &bessel, 0).is_err());
    }
}
