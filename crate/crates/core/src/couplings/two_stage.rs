//! Mirror coupling of the base followed by the vertical reflection coupling.

use super::mirror::{mirror_run, HorizontalOutcome};
use super::vertical::{run_vertical, validate_level};
use super::{CouplingError, CouplingOutcome};
use crate::model_spaces::{base_distance, wrap_fiber, BasePoint, Isometry, SpaceSpec, TotalPoint};
use crate::sde_sim::{n_steps, PathConfig};

/// Stage-1 result with the handoff displacement `z̃ − z`.
struct Stage1 {
    horizontal: Option<HorizontalOutcome>,
    time: f64,
    displacement: f64,
}

fn stage1(
    spec: &SpaceSpec,
    start1: &TotalPoint,
    start2: &TotalPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<Result<Stage1, HorizontalOutcome>, CouplingError> {
    if spec.n_factors() != 1 {
        return Err(CouplingError::Invalid("two-stage coupling acts on a single planar factor".into()));
    }
    if base_distance(spec, &start1.base, &start2.base) < 1e-12 {
        return Ok(Ok(Stage1 { horizontal: None, time: 0.0, displacement: wrap_fiber(spec, start2.z - start1.z) }));
    }
    let h = mirror_run(spec, start1, start2, cfg, path_index, 0)?;
    if !h.coupled {
        return Ok(Err(h));
    }
    Ok(Ok(Stage1 {
        horizontal: Some(h),
        time: h.meeting_time,
        displacement: wrap_fiber(spec, h.partner.z - h.primary.z),
    }))
}

/// Stage-2 configuration on the remaining time, or `None` if less than one step remains.
fn stage2_config(cfg: &PathConfig, elapsed: f64) -> Option<PathConfig> {
    let rest = cfg.horizon - elapsed;
    (rest >= cfg.dt).then(|| cfg.clone().with_horizon(rest))
}

/// `τ = σ' + σ_a` with `a` half the displacement at `σ'`; the second stage uses
/// its own random streams and starts afresh from the canonical pair `(o, 0)`,
/// `(o, 2a)`.
pub fn two_stage_coupling(
    spec: &SpaceSpec,
    start1: &TotalPoint,
    start2: &TotalPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<CouplingOutcome, CouplingError> {
    cfg.validate()?;
    let s1 = match stage1(spec, start1, start2, cfg, path_index)? {
        Ok(s) => s,
        Err(h) => return Ok(CouplingOutcome::uncoupled(cfg.horizon, h.escaped)),
    };
    let a = 0.5 * s1.displacement.abs();
    let mut out = CouplingOutcome::uncoupled(cfg.horizon, false);
    out.stage1_time = Some(s1.time);
    out.vertical_displacement_at_stage2 = Some(s1.displacement);
    if a == 0.0 {
        out.coupled = true;
        out.truncated = false;
        out.coupling_time = s1.time;
        return Ok(out);
    }
    validate_level(spec, a)?;
    if let Some(cfg2) = stage2_config(cfg, s1.time) {
        let run = run_vertical(spec, a, &cfg2, path_index, 1, &[], false);
        if let Some(hit) = run.hit {
            out.coupled = true;
            out.truncated = false;
            out.coupling_time = s1.time + hit.time;
        }
    }
    Ok(out)
}

/// Outcome and, when still uncoupled at the horizon, the two base points there.
#[derive(Clone, Debug)]
pub struct TwoStageProbe {
    pub outcome: CouplingOutcome,
    /// `(primary, partner)` at the horizon; escaped hyperbolic runs report the
    /// escape position, whose side of the bisector no longer changes in practice.
    pub bases: Option<(BasePoint, BasePoint)>,
}

/// Two-stage coupling that also reports the base points at the horizon.
///
/// In the second stage the canonical pair from the origin is carried to the
/// meeting point by an isometry; when `z̃ < z` the roles of the two canonical
/// paths are exchanged.
pub fn two_stage_probe(
    spec: &SpaceSpec,
    start1: &TotalPoint,
    start2: &TotalPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<TwoStageProbe, CouplingError> {
    cfg.validate()?;
    let s1 = match stage1(spec, start1, start2, cfg, path_index)? {
        Ok(s) => s,
        Err(h) => {
            return Ok(TwoStageProbe {
                outcome: CouplingOutcome::uncoupled(cfg.horizon, h.escaped),
                bases: Some((h.primary.base, h.partner.base)),
            })
        }
    };
    let meet = s1.horizontal.map_or(start1.base, |h| h.primary.base);
    let a = 0.5 * s1.displacement.abs();
    let mut out = CouplingOutcome::uncoupled(cfg.horizon, false);
    out.stage1_time = Some(s1.time);
    out.vertical_displacement_at_stage2 = Some(s1.displacement);
    let Some(cfg2) = stage2_config(cfg, s1.time).filter(|_| a > 0.0) else {
        if a == 0.0 {
            out.coupled = true;
            out.truncated = false;
            out.coupling_time = s1.time;
            return Ok(TwoStageProbe { outcome: out, bases: None });
        }
        return Ok(TwoStageProbe { outcome: out, bases: Some((meet, meet)) });
    };
    validate_level(spec, a)?;
    let last = n_steps(cfg2.dt, cfg2.horizon);
    let run = run_vertical(spec, a, &cfg2, path_index, 1, &[last], false);
    if let Some(hit) = run.hit {
        out.coupled = true;
        out.truncated = false;
        out.coupling_time = s1.time + hit.time;
        return Ok(TwoStageProbe { outcome: out, bases: None });
    }
    let state = run.pair_states(spec).remove(0);
    let iso = Isometry::from_origin_to(spec.base(), &meet.embedded());
    let carry = |b: &BasePoint| BasePoint::from_embedded_unchecked(spec.base(), iso.apply(&b.embedded()));
    let (p, q) = (carry(&state.primary[0]), carry(&state.partner[0]));
    let bases = if s1.displacement > 0.0 { (p, q) } else { (q, p) };
    Ok(TwoStageProbe { outcome: out, bases: Some(bases) })
}
