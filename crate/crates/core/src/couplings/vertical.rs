//! Vertical reflection coupling of Brownian motions from `(o, 0)` and `(o, 2a)`.

use super::{require_path_scheme, CoupledPair, CouplingError, CouplingOutcome, PairState, AXIS_DEGENERACY_RADIUS};
use crate::analytics::{ks_two_sample, Estimate, KsResult};
use crate::model_spaces::{reflect_base, wrap_fiber, BasePoint, Fiber, SpaceSpec, TotalPoint, Vec3};
use crate::sde_sim::{
    channel, n_steps, rng_stream, run_batch, simulate_first_passage, simulate_path, HittingRecord, LevelSet,
    PathConfig, PathEngine, Trajectory,
};
use serde::Serialize;
use std::f64::consts::TAU;

pub(crate) fn validate_level(spec: &SpaceSpec, a: f64) -> Result<(), CouplingError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(CouplingError::Invalid(format!("half-displacement a = {a} must be positive")));
    }
    if spec.fiber() == Fiber::Circle && 2.0 * a > TAU {
        return Err(CouplingError::Invalid(format!("circle fibers need 2a in (0, 2π], got {}", 2.0 * a)));
    }
    Ok(())
}

fn axis_of(p: &Vec3) -> Option<f64> {
    let s = (p[0] * p[0] + p[1] * p[1]).sqrt();
    (s >= AXIS_DEGENERACY_RADIUS).then(|| p[1].atan2(p[0]))
}

/// Primary state at one requested step.
struct Snapshot {
    step: usize,
    t: f64,
    base: Vec<BasePoint>,
    z_lift: f64,
}

pub(crate) struct VerticalRun {
    pub hit: Option<HittingRecord>,
    pub axes: Vec<f64>,
    snapshots: Vec<Snapshot>,
    traj: Option<Trajectory>,
    a: f64,
}

/// Runs the primary path, detects `σ_a` and keeps the states needed for the partner.
///
/// Simulation continues past `σ_a` only as far as the last requested step.
/// Without a usable hitting point the axes are drawn uniformly; the partner's
/// law is unchanged because `2Θ − θ` is uniform and independent of the radial
/// and vertical motion either way.
pub(crate) fn run_vertical(
    spec: &SpaceSpec,
    a: f64,
    cfg: &PathConfig,
    path_index: u64,
    stage: u32,
    probe_steps: &[usize],
    record: bool,
) -> VerticalRun {
    let starts = vec![BasePoint::origin(spec.base()); spec.n_factors()];
    let mut eng = PathEngine::new(spec, &starts, 0.0, cfg, path_index, stage);
    let level = LevelSet::for_spec(spec, a);
    let last = if record { eng.n_steps } else { probe_steps.iter().copied().max().unwrap_or(0) };
    let mut traj = record.then(|| Trajectory {
        times: Vec::with_capacity(eng.n_steps + 1),
        base: Vec::with_capacity((eng.n_steps + 1) * starts.len()),
        z: Vec::with_capacity(eng.n_steps + 1),
        z_lift: Vec::with_capacity(eng.n_steps + 1),
        clock: Vec::with_capacity(eng.n_steps + 1),
        n_factors: starts.len(),
        path_index,
    });
    let mut snapshots = Vec::with_capacity(probe_steps.len());
    let mut next_probe = 0;
    let mut hit = None;
    let mut axes: Vec<Option<f64>> = Vec::new();
    loop {
        while next_probe < probe_steps.len() && probe_steps[next_probe] == eng.step {
            snapshots.push(Snapshot {
                step: eng.step,
                t: eng.t,
                base: eng.walkers.iter().map(|w| w.point()).collect(),
                z_lift: eng.z_lift,
            });
            next_probe += 1;
        }
        if let Some(tr) = traj.as_mut() {
            tr.times.push(eng.t);
            tr.base.extend(eng.walkers.iter().map(|w| w.point()));
            tr.z.push(wrap_fiber(spec, eng.z_lift));
            tr.z_lift.push(eng.z_lift);
            tr.clock.push(eng.clock);
        }
        if eng.done() || (hit.is_some() && eng.step >= last) {
            break;
        }
        let adv = eng.advance();
        if hit.is_none() {
            let bridge = cfg.bridge_correction.then_some(&mut eng.bridge);
            if let Some(f) = level.crossing(adv.z0, adv.z1, adv.s1 - adv.s0, bridge) {
                hit = Some(HittingRecord::at(eng.step, &adv, f));
                axes = eng.walkers.iter().map(|w| axis_of(&w.prev)).collect();
            }
        }
    }
    if axes.is_empty() {
        axes = vec![None; starts.len()];
    }
    let axes = axes
        .into_iter()
        .enumerate()
        .map(|(i, ax)| {
            ax.unwrap_or_else(|| {
                TAU * rng_stream(cfg.seed, path_index, channel::of(stage, i as u32, channel::AXIS)).uniform()
            })
        })
        .collect();
    VerticalRun { hit, axes, snapshots, traj, a }
}

impl VerticalRun {
    pub fn outcome(&self, horizon: f64) -> CouplingOutcome {
        match self.hit {
            Some(h) => CouplingOutcome::at(h.time),
            None => CouplingOutcome::uncoupled(horizon, false),
        }
    }

    fn partner(&self, spec: &SpaceSpec, step: usize, base: &[BasePoint], z_lift: f64) -> (Vec<BasePoint>, f64) {
        if self.hit.is_some_and(|h| h.crossing_index <= step) {
            (base.to_vec(), z_lift)
        } else {
            let b = base.iter().zip(&self.axes).map(|(p, &ax)| reflect_base(spec, ax, p)).collect();
            (b, 2.0 * self.a - z_lift)
        }
    }

    pub fn pair_states(&self, spec: &SpaceSpec) -> Vec<PairState> {
        self.snapshots
            .iter()
            .map(|s| {
                let (partner, zp) = self.partner(spec, s.step, &s.base, s.z_lift);
                PairState {
                    t: s.t,
                    primary: s.base.clone(),
                    z: wrap_fiber(spec, s.z_lift),
                    partner,
                    z_partner: wrap_fiber(spec, zp),
                }
            })
            .collect()
    }

    fn into_pair(self, spec: &SpaceSpec, horizon: f64) -> CoupledPair {
        let outcome = self.outcome(horizon);
        let primary = self.traj.as_ref().expect("recorded run");
        let nf = primary.n_factors;
        let mut partner = primary.clone();
        for step in 0..primary.len() {
            let range = step * nf..(step + 1) * nf;
            let (b, zl) = self.partner(spec, step, &primary.base[range.clone()], primary.z_lift[step]);
            partner.base[range].copy_from_slice(&b);
            partner.z_lift[step] = zl;
            partner.z[step] = wrap_fiber(spec, zl);
        }
        CoupledPair { primary_path: self.traj.unwrap(), partner_path: partner, outcome, axes: self.axes }
    }
}

/// Full primary and partner paths on the grid of `cfg`.
pub fn vertical_reflection_coupling(
    spec: &SpaceSpec,
    a: f64,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<CoupledPair, CouplingError> {
    cfg.validate()?;
    validate_level(spec, a)?;
    require_path_scheme(cfg.scheme)?;
    Ok(run_vertical(spec, a, cfg, path_index, 0, &[], true).into_pair(spec, cfg.horizon))
}

/// Coupling time only; any scheme, including the clock representation.
pub fn vertical_coupling_time(
    spec: &SpaceSpec,
    a: f64,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<CouplingOutcome, CouplingError> {
    validate_level(spec, a)?;
    let rec = simulate_first_passage(spec, &TotalPoint::origin(spec), a, cfg, path_index)?;
    Ok(if rec.hit { CouplingOutcome::at(rec.time) } else { CouplingOutcome::uncoupled(cfg.horizon, false) })
}

/// Coupling outcome and the pair state at each requested time.
#[derive(Clone, Debug)]
pub struct VerticalProbe {
    pub outcome: CouplingOutcome,
    pub states: Vec<PairState>,
}

pub(crate) fn probe_steps(cfg: &PathConfig, times: &[f64]) -> Result<Vec<usize>, CouplingError> {
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t <= cfg.horizon) {
            return Err(CouplingError::Invalid(format!("probe time {t} outside [0, {}]", cfg.horizon)));
        }
        steps.push(if t == 0.0 { 0 } else { n_steps(cfg.dt, t) });
    }
    if steps.windows(2).any(|w| w[1] < w[0]) {
        return Err(CouplingError::Invalid("probe times must be non-decreasing".into()));
    }
    Ok(steps)
}

/// Runs one coupling to its horizon (or to the last probe once coupled) and
/// returns the pair state at each grid time nearest `times`.
pub fn vertical_probe(
    spec: &SpaceSpec,
    a: f64,
    cfg: &PathConfig,
    path_index: u64,
    times: &[f64],
) -> Result<VerticalProbe, CouplingError> {
    cfg.validate()?;
    validate_level(spec, a)?;
    require_path_scheme(cfg.scheme)?;
    let steps = probe_steps(cfg, times)?;
    let run = run_vertical(spec, a, cfg, path_index, 0, &steps, false);
    Ok(VerticalProbe { outcome: run.outcome(cfg.horizon), states: run.pair_states(spec) })
}

/// KS comparison of the partner's state with an independent path from `(o, 2a)`.
#[derive(Clone, Debug, Serialize)]
pub struct MarginalCheck {
    /// `(coordinate, test)` for the embedded `x`, `y` and the vertical coordinate.
    pub tests: Vec<(String, KsResult)>,
    pub partner_z_mean: Estimate,
    /// Mean squared base radius of the partner.
    pub partner_r2_mean: Estimate,
}

impl MarginalCheck {
    pub fn min_p_value(&self) -> f64 {
        self.tests.iter().map(|(_, k)| k.p_value).fold(1.0, f64::min)
    }
}

/// Partner marginals at `t_probe` against independent simulation; single-factor specs.
///
/// The reference paths use path indices `n_paths..2·n_paths`, so they share no
/// randomness with the couplings.
pub fn partner_marginal_check(
    spec: &SpaceSpec,
    a: f64,
    cfg: &PathConfig,
    n_paths: u64,
    t_probe: f64,
) -> Result<MarginalCheck, CouplingError> {
    if spec.n_factors() != 1 {
        return Err(CouplingError::Invalid("marginal check needs a single-factor space".into()));
    }
    cfg.validate()?;
    validate_level(spec, a)?;
    require_path_scheme(cfg.scheme)?;
    let steps = probe_steps(cfg, &[t_probe])?;
    let partner: Vec<(BasePoint, f64)> = run_batch(n_paths, |i| {
        let s = run_vertical(spec, a, cfg, i, 0, &steps, false).pair_states(spec).remove(0);
        (s.partner[0], s.z_partner)
    });
    let start = TotalPoint::new(spec, BasePoint::origin(spec.base()), 2.0 * a);
    let ref_cfg = cfg.clone().with_horizon(t_probe.max(cfg.dt));
    let reference: Vec<(BasePoint, f64)> = run_batch(n_paths, |i| {
        let tr = simulate_path(spec, &start, &ref_cfg, n_paths + i).expect("validated config");
        let k = steps[0].min(tr.len() - 1);
        (tr.base[k], tr.z[k])
    });
    let coord = |v: &[(BasePoint, f64)], f: &dyn Fn(&(BasePoint, f64)) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let getters: [(&str, &dyn Fn(&(BasePoint, f64)) -> f64); 3] =
        [("x", &|s| s.0.embedded()[0]), ("y", &|s| s.0.embedded()[1]), ("z", &|s| s.1)];
    let mut tests = Vec::new();
    for (name, g) in getters {
        let ks = ks_two_sample(&coord(&partner, g), &coord(&reference, g))
            .map_err(|e| CouplingError::Invalid(e.to_string()))?;
        tests.push((name.to_string(), ks));
    }
    Ok(MarginalCheck {
        tests,
        partner_z_mean: Estimate::mean_of(partner.iter().map(|s| s.1)),
        partner_r2_mean: Estimate::mean_of(partner.iter().map(|s| s.0.r().powi(2))),
    })
}
