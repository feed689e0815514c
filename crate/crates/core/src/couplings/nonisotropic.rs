//! Couplings on the non-isotropic Heisenberg group `H^n_ω`.

use super::vertical::{run_vertical, validate_level, vertical_reflection_coupling};
use super::{CoupledPair, CouplingError, CouplingOutcome};
use crate::model_spaces::{OmegaPoint, SpaceSpec};
use crate::sde_sim::{channel, rng_stream, LevelSet, PathConfig};
use serde::Serialize;

/// Vertical reflection coupling from `(0, 0)` and `(0, 2a)`; each planar factor
/// is reflected across its own axis at `σ_a`.
pub fn nonisotropic_vertical_coupling(
    weights: &[f64],
    a: f64,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<CoupledPair, CouplingError> {
    let spec = SpaceSpec::nonisotropic(weights.to_vec())?;
    vertical_reflection_coupling(&spec, a, cfg, path_index)
}

/// `A = z − z̃ + ½ Σ αᵢ (xᵢỹᵢ − x̃ᵢyᵢ)`.
pub fn invariant_area_difference(weights: &[f64], p: &OmegaPoint, q: &OmegaPoint) -> f64 {
    let cross: f64 =
        weights.iter().zip(p.xy.iter().zip(&q.xy)).map(|(a, (u, v))| a * (u[0] * v[1] - v[0] * u[1])).sum();
    p.z - q.z + 0.5 * cross
}

/// Result of the synchronous/mirror stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonisotropicStage1 {
    pub met: bool,
    /// `T₁`, the last per-factor meeting time; the horizon when not met.
    pub t1: f64,
    /// `A_{T₁}` when met.
    pub area_difference: f64,
}

fn check_starts(weights: &[f64], p: &OmegaPoint, q: &OmegaPoint) -> Result<(), CouplingError> {
    if weights.is_empty() || p.xy.len() != weights.len() || q.xy.len() != weights.len() {
        return Err(CouplingError::Invalid(format!(
            "{} weights for start points with {} and {} factors",
            weights.len(),
            p.xy.len(),
            q.xy.len()
        )));
    }
    if !(p.z.is_finite() && q.z.is_finite()) || p.xy.iter().chain(&q.xy).flatten().any(|c| !c.is_finite()) {
        return Err(CouplingError::Invalid("non-finite start coordinates".into()));
    }
    Ok(())
}

/// Per factor, rotates so that the partner sits straight above the primary, then
/// moves `x` synchronously and mirrors `y` about the midpoint until the two meet;
/// met factors move synchronously. At each meeting the partner is snapped onto
/// the primary along `y`, which leaves `A` unchanged.
pub(crate) fn stage1(
    weights: &[f64],
    p: &OmegaPoint,
    q: &OmegaPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> NonisotropicStage1 {
    struct Factor {
        alpha: f64,
        x: f64,
        y: f64,
        yt: f64,
        met: bool,
        rng_x: crate::sde_sim::RngStream,
        rng_y: crate::sde_sim::RngStream,
        bridge: crate::sde_sim::RngStream,
    }
    let stream = |i: usize, kind: u32| rng_stream(cfg.seed, path_index, channel::of(0, i as u32, kind));
    let mut factors: Vec<Factor> = weights
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let (u, v) = (p.xy[i], q.xy[i]);
            let (dx, dy) = (v[0] - u[0], v[1] - u[1]);
            let len = dx.hypot(dy);
            // Rotation by φ sends (dx, dy) to (0, len).
            let phi = if len > 0.0 { std::f64::consts::FRAC_PI_2 - dy.atan2(dx) } else { 0.0 };
            let (s, c) = phi.sin_cos();
            let (x, y) = (c * u[0] - s * u[1], s * u[0] + c * u[1]);
            Factor {
                alpha,
                x,
                y,
                yt: y + len,
                met: len == 0.0,
                rng_x: stream(i, channel::RADIAL),
                rng_y: stream(i, channel::ANGULAR),
                bridge: stream(i, channel::BRIDGE),
            }
        })
        .collect();
    // Rotations about the origin preserve z and the cross terms, so only A matters.
    let mut area = invariant_area_difference(weights, p, q);
    let mut t1: f64 = 0.0;
    let level = LevelSet { a: 0.0, circle: false };
    let n = cfg.n_steps();
    let mut t = 0.0;
    for step in 1..=n {
        if factors.iter().all(|f| f.met) {
            return NonisotropicStage1 { met: true, t1, area_difference: area };
        }
        let t_next = if step == n { cfg.horizon } else { step as f64 * cfg.dt };
        let h = t_next - t;
        let sq = h.sqrt();
        for f in factors.iter_mut() {
            let dx = sq * f.rng_x.gaussian();
            let dy = sq * f.rng_y.gaussian();
            if f.met {
                f.x += dx;
                f.y += dy;
                f.yt = f.y;
                continue;
            }
            // dA = α(ỹ − y)dx with x̃ = x, evaluated at the step midpoint so it is exact
            // for the piecewise-linear paths.
            area += f.alpha * (f.yt - f.y - dy) * dx;
            let (w0, y1, yt1) = (0.5 * (f.yt - f.y), f.y + dy, f.yt - dy);
            let w1 = 0.5 * (yt1 - y1);
            f.x += dx;
            f.y = y1;
            f.yt = yt1;
            let b = cfg.bridge_correction.then_some(&mut f.bridge);
            if let Some(frac) = level.crossing(w0, w1, h, b) {
                f.met = true;
                f.yt = f.y;
                t1 = t1.max(t + frac * h);
            }
        }
        t = t_next;
    }
    if factors.iter().all(|f| f.met) {
        return NonisotropicStage1 { met: true, t1, area_difference: area };
    }
    NonisotropicStage1 { met: false, t1: cfg.horizon, area_difference: f64::NAN }
}

/// Synchronous/mirror stage followed by the weighted vertical coupling with `2a = |A_{T₁}|`.
pub fn nonisotropic_two_stage(
    weights: &[f64],
    start1: &OmegaPoint,
    start2: &OmegaPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<CouplingOutcome, CouplingError> {
    cfg.validate()?;
    let spec = SpaceSpec::nonisotropic(weights.to_vec())?;
    check_starts(weights, start1, start2)?;
    let s1 = stage1(weights, start1, start2, cfg, path_index);
    if !s1.met {
        return Ok(CouplingOutcome::uncoupled(cfg.horizon, false));
    }
    let mut out = CouplingOutcome::uncoupled(cfg.horizon, false);
    out.stage1_time = Some(s1.t1);
    out.vertical_displacement_at_stage2 = Some(s1.area_difference);
    let a = 0.5 * s1.area_difference.abs();
    if a == 0.0 {
        out.coupled = true;
        out.truncated = false;
        out.coupling_time = s1.t1;
        return Ok(out);
    }
    validate_level(&spec, a)?;
    let rest = cfg.horizon - s1.t1;
    if rest >= cfg.dt {
        let run = run_vertical(&spec, a, &cfg.clone().with_horizon(rest), path_index, 1, &[], false);
        if let Some(hit) = run.hit {
            out.coupled = true;
            out.truncated = false;
            out.coupling_time = s1.t1 + hit.time;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::nonisotropic_tail_bound;
    use crate::couplings::vertical_reflection_coupling;
    use crate::sde_sim::{rng_stream, run_batch};

    #[test]
    fn single_unit_weight_is_heisenberg() {
        let cfg = PathConfig::new(1e-3, 2.0, 44);
        for i in 0..10 {
            let a = nonisotropic_vertical_coupling(&[1.0], 0.8, &cfg, i).unwrap();
            let b = vertical_reflection_coupling(&SpaceSpec::heisenberg(), 0.8, &cfg, i).unwrap();
            assert_eq!(a.outcome, b.outcome);
            assert_eq!(a.partner_path.z_lift, b.partner_path.z_lift);
            assert_eq!(a.partner_path.base, b.partner_path.base);
            assert_eq!(a.axes, b.axes);
        }
    }

    #[test]
    fn tail_below_weighted_bound() {
        let w = [1.0, 2.0];
        let spec = SpaceSpec::nonisotropic(w.to_vec()).unwrap();
        let cfg = PathConfig::new(1e-3, 8.0, 12);
        let n = 10_000;
        let times = run_batch(n, |i| crate::couplings::vertical_coupling_time(&spec, 1.0, &cfg, i).unwrap());
        for &t in &[2.0, 4.0, 8.0] {
            let k = times.iter().filter(|o| !o.coupled || o.coupling_time > t).count() as f64 / n as f64;
            let se = (k * (1.0 - k) / n as f64).sqrt();
            assert!(k <= nonisotropic_tail_bound(&w, 1.0, t) + 3.0 * se, "t={t}: {k}");
        }
    }

    #[test]
    fn equal_starts_couple_immediately() {
        let p = OmegaPoint { xy: vec![[0.3, -1.0], [2.0, 0.5]], z: 0.7 };
        let out = nonisotropic_two_stage(&[1.0, 3.0], &p, &p, &PathConfig::new(1e-3, 1.0, 0), 0).unwrap();
        assert!(out.coupled && out.coupling_time == 0.0);
        assert_eq!(out.stage1_time, Some(0.0));
    }

    #[test]
    fn area_difference_constant_under_synchronous_motion() {
        let w = [1.0, 2.5];
        let mut p = OmegaPoint { xy: vec![[0.2, 0.1], [1.0, -0.4]], z: 0.3 };
        let mut q = OmegaPoint { xy: vec![[0.2, 0.1], [1.0, 0.9]], z: -0.2 };
        let a0 = invariant_area_difference(&w, &p, &q);
        let mut g = rng_stream(1, 0, 0);
        // Factor 0 coincides and moves synchronously: A is unchanged.
        for _ in 0..100 {
            let (dx, dy) = (0.05 * g.gaussian(), 0.05 * g.gaussian());
            for pt in [&mut p, &mut q] {
                let [x, y] = pt.xy[0];
                pt.z += 0.5 * w[0] * (x * (y + dy) - y * (x + dx));
                pt.xy[0] = [x + dx, y + dy];
            }
        }
        assert!((invariant_area_difference(&w, &p, &q) - a0).abs() < 1e-12);
        // Factor 1 has x̃ = x and ỹ ≠ y: a synchronous x move changes A by α(ỹ − y)dx.
        let dx = 0.1;
        for pt in [&mut p, &mut q] {
            let [x, y] = pt.xy[1];
            pt.z += 0.5 * w[1] * (x * y - y * (x + dx));
            pt.xy[1] = [x + dx, y];
        }
        let change = invariant_area_difference(&w, &p, &q) - a0;
        assert!((change - w[1] * (0.9 - -0.4) * dx).abs() < 1e-12);
    }

    #[test]
    fn two_stage_stage1_matches_area_at_meeting() {
        let w = [1.0, 2.0];
        let p = OmegaPoint { xy: vec![[0.0, 0.0], [0.0, 0.0]], z: 0.0 };
        let q = OmegaPoint { xy: vec![[0.5, 0.0], [0.0, -0.3]], z: 0.4 };
        let cfg = PathConfig::new(1e-3, 30.0, 8);
        let out = run_batch(1000, |i| nonisotropic_two_stage(&w, &p, &q, &cfg, i).unwrap());
        let met = out.iter().filter(|o| o.stage1_time.is_some()).count();
        assert!(met > 800, "{met}");
        for o in &out {
            if let (Some(t1), true) = (o.stage1_time, o.coupled) {
                assert!(t1 <= o.coupling_time);
                assert!(o.vertical_displacement_at_stage2.unwrap().is_finite());
            }
        }
    }

    #[test]
    fn rejects_mismatched_starts() {
        let p = OmegaPoint::identity(2);
        let q = OmegaPoint::identity(3);
        assert!(nonisotropic_two_stage(&[1.0, 2.0], &p, &q, &PathConfig::new(1e-3, 1.0, 0), 0).is_err());
    }
}
