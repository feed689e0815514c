//! Simulation of the base Brownian motion and the vertical stochastic-area process.

mod engine;
mod hitting;
mod rng;

pub(crate) use engine::{n_steps, Advance, FactorWalker, PathEngine};
pub use hitting::LevelSet;
pub use rng::{channel, rng_stream, RngStream};

use crate::model_spaces::{wrap_fiber, BasePoint, OmegaPoint, SpaceError, SpaceSpec, TotalPoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default pole-guard radius.
pub const DEFAULT_R_MIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid path configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("start point does not match the space: {0}")]
    Start(String),
    #[error("scheme {0:?} does not produce the swept area needed here")]
    SchemeUnsupported(Scheme),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Euler–Maruyama on `(r, θ)` with `Δz = c(r)·ΔW2`.
    PolarEM,
    /// Geodesic random walk in the embedding with `Δz` the swept geodesic triangle.
    EmbeddedGeodesic,
    /// Radial motion and clock only; `z = z₀ + W_{S(t)}` with an independent driver.
    BesselClock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub bridge_correction: bool,
    pub r_min: f64,
    /// Hyperbolic mirror coupling gives up once the signed distance to the
    /// bisector exceeds this (the chance of a later meeting is `≈ (4/π)e^{−ρ}`).
    pub escape_distance: f64,
}

impl PathConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        PathConfig {
            dt,
            horizon,
            seed,
            scheme: Scheme::EmbeddedGeodesic,
            bridge_correction: true,
            r_min: DEFAULT_R_MIN,
            escape_distance: 12.0,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(SimError::Config(format!("horizon {} must be finite and >= dt", self.horizon)));
        }
        if !(self.r_min > 0.0 && self.r_min <= 0.1) {
            return Err(SimError::Config(format!("r_min {} outside (0, 0.1]", self.r_min)));
        }
        if !(self.escape_distance > 0.0) {
            return Err(SimError::Config("escape_distance must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        n_steps(self.dt, self.horizon)
    }
}

/// Discretized path. Base points are stored factor-major per step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub base: Vec<BasePoint>,
    /// Vertical coordinate, wrapped on circle fibers.
    pub z: Vec<f64>,
    /// Unwrapped vertical coordinate.
    pub z_lift: Vec<f64>,
    pub clock: Vec<f64>,
    pub n_factors: usize,
    pub path_index: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Base point of the first factor at `step`.
    pub fn base_at(&self, step: usize) -> &BasePoint {
        &self.base[step * self.n_factors]
    }

    pub fn factor_at(&self, step: usize, factor: usize) -> &BasePoint {
        &self.base[step * self.n_factors + factor]
    }

    pub fn total_point(&self, step: usize) -> TotalPoint {
        TotalPoint { base: *self.base_at(step), z: self.z[step] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingRecord {
    pub hit: bool,
    /// First-passage estimate; the horizon when not hit.
    pub time: f64,
    /// Index of the step whose end point follows the crossing.
    pub crossing_index: usize,
    pub sub_step_fraction: f64,
}

impl HittingRecord {
    pub(crate) fn truncated(horizon: f64, n_steps: usize) -> Self {
        HittingRecord { hit: false, time: horizon, crossing_index: n_steps, sub_step_fraction: 0.0 }
    }

    pub(crate) fn at(step_end: usize, adv: &Advance, frac: f64) -> Self {
        HittingRecord {
            hit: true,
            time: adv.t0 + frac * (adv.t1 - adv.t0),
            crossing_index: step_end,
            sub_step_fraction: frac,
        }
    }
}

/// One Euler–Maruyama step of the polar SDE, guarded near the poles.
pub fn step_base(spec: &SpaceSpec, state: &BasePoint, dw1: f64, dw2: f64, dt: f64) -> BasePoint {
    let u =
        engine::polar_em_update(spec.base(), state.r(), state.theta(), &state.embedded(), dw1, dw2, dt, DEFAULT_R_MIN);
    BasePoint::from_embedded_unchecked(spec.base(), u.p)
}

fn check_start(spec: &SpaceSpec, start: &BasePoint) -> Result<(), SimError> {
    if start.base() != spec.base() {
        return Err(SimError::Start(format!("{:?} point for a {:?} base", start.base(), spec.base())));
    }
    Ok(())
}

fn record(spec: &SpaceSpec, mut eng: PathEngine, path_index: u64) -> Trajectory {
    let n = eng.n_steps + 1;
    let nf = eng.walkers.len();
    let mut tr = Trajectory {
        times: Vec::with_capacity(n),
        base: Vec::with_capacity(n * nf),
        z: Vec::with_capacity(n),
        z_lift: Vec::with_capacity(n),
        clock: Vec::with_capacity(n),
        n_factors: nf,
        path_index,
    };
    let push = |tr: &mut Trajectory, eng: &PathEngine| {
        tr.times.push(eng.t);
        tr.base.extend(eng.walkers.iter().map(|w| w.point()));
        tr.z.push(wrap_fiber(spec, eng.z_lift));
        tr.z_lift.push(eng.z_lift);
        tr.clock.push(eng.clock);
    };
    push(&mut tr, &eng);
    while !eng.done() {
        eng.advance();
        push(&mut tr, &eng);
    }
    tr
}

/// Simulates one path from `start`; weighted specs need [`simulate_path_omega`]
/// unless they have a single factor.
pub fn simulate_path(
    spec: &SpaceSpec,
    start: &TotalPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    check_start(spec, &start.base)?;
    if spec.n_factors() != 1 {
        return Err(SimError::Start("product space needs one start point per factor".into()));
    }
    let z0 = wrap_fiber(spec, start.z);
    let eng = PathEngine::new(spec, &[start.base], z0, cfg, path_index, 0);
    Ok(record(spec, eng, path_index))
}

pub(crate) fn omega_starts(weights: &[f64], start: &OmegaPoint) -> Result<Vec<BasePoint>, SimError> {
    if start.xy.len() != weights.len() {
        return Err(SimError::Start(format!("{} planar factors for {} weights", start.xy.len(), weights.len())));
    }
    start
        .xy
        .iter()
        .map(|p| {
            BasePoint::from_embedded(crate::model_spaces::Base::Euclidean, [p[0], p[1], 0.0]).map_err(SimError::from)
        })
        .collect()
}

/// Simulates the non-isotropic Heisenberg group `H^n_ω` from a product start point.
pub fn simulate_path_omega(
    weights: &[f64],
    start: &OmegaPoint,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let spec = SpaceSpec::nonisotropic(weights.to_vec())?;
    let starts = omega_starts(weights, start)?;
    let eng = PathEngine::new(&spec, &starts, start.z, cfg, path_index, 0);
    Ok(record(&spec, eng, path_index))
}

/// Radial factor paths and the clock `S(t)` of the time-changed representation.
#[derive(Clone, Debug)]
pub struct ClockPath {
    pub times: Vec<f64>,
    /// Radii per step, factor-major.
    pub radius: Vec<f64>,
    pub clock: Vec<f64>,
    pub n_factors: usize,
}

/// Simulates only the radial processes and the clock; every factor starts at radius
/// `start_r` on the positive x-axis.
pub fn simulate_bessel_clock(
    spec: &SpaceSpec,
    start_r: f64,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<ClockPath, SimError> {
    cfg.validate()?;
    let p = BasePoint::from_polar(spec.base(), start_r, 0.0)?;
    let starts = vec![p; spec.n_factors()];
    let cfg = PathConfig { scheme: Scheme::BesselClock, ..cfg.clone() };
    let mut eng = PathEngine::new(spec, &starts, 0.0, &cfg, path_index, 0);
    let n = eng.n_steps + 1;
    let mut out = ClockPath {
        times: Vec::with_capacity(n),
        radius: Vec::with_capacity(n * starts.len()),
        clock: Vec::with_capacity(n),
        n_factors: starts.len(),
    };
    loop {
        out.times.push(eng.t);
        out.radius.extend(eng.walkers.iter().map(|w| w.radius()));
        out.clock.push(eng.clock);
        if eng.done() {
            break;
        }
        eng.advance();
    }
    Ok(out)
}

/// First passage of a stored trajectory to `{a}` or `{a, a − 2π}`.
///
/// Bridge uniforms come from the path's own bridge stream, so the result matches
/// the streaming detector run on the same path.
pub fn first_passage_vertical(spec: &SpaceSpec, traj: &Trajectory, a: f64, cfg: &PathConfig) -> HittingRecord {
    let level = LevelSet::for_spec(spec, a);
    let mut bridge = rng_stream(cfg.seed, traj.path_index, channel::of(0, 0, channel::BRIDGE));
    let n = traj.len();
    if n > 0 && level.contains(traj.z_lift[0]) {
        return HittingRecord { hit: true, time: traj.times[0], crossing_index: 0, sub_step_fraction: 0.0 };
    }
    for i in 1..n {
        let adv = Advance {
            t0: traj.times[i - 1],
            t1: traj.times[i],
            z0: traj.z_lift[i - 1],
            z1: traj.z_lift[i],
            s0: traj.clock[i - 1],
            s1: traj.clock[i],
        };
        let b = cfg.bridge_correction.then_some(&mut bridge);
        if let Some(f) = level.crossing(adv.z0, adv.z1, adv.s1 - adv.s0, b) {
            return HittingRecord::at(i, &adv, f);
        }
    }
    HittingRecord::truncated(cfg.horizon, n.saturating_sub(1))
}

/// Streams a path until it hits the level set or reaches the horizon.
pub(crate) fn stream_first_passage(eng: &mut PathEngine, level: &LevelSet, bridge_on: bool) -> Option<HittingRecord> {
    if level.contains(eng.z_lift) {
        return Some(HittingRecord { hit: true, time: eng.t, crossing_index: eng.step, sub_step_fraction: 0.0 });
    }
    while !eng.done() {
        let adv = eng.advance();
        let bridge = if bridge_on { Some(&mut eng.bridge) } else { None };
        if let Some(f) = level.crossing(adv.z0, adv.z1, adv.s1 - adv.s0, bridge) {
            return Some(HittingRecord::at(eng.step, &adv, f));
        }
    }
    None
}

/// First passage without storing the path; any scheme, including `BesselClock`.
pub fn simulate_first_passage(
    spec: &SpaceSpec,
    start: &TotalPoint,
    a: f64,
    cfg: &PathConfig,
    path_index: u64,
) -> Result<HittingRecord, SimError> {
    cfg.validate()?;
    check_start(spec, &start.base)?;
    let starts = vec![start.base; spec.n_factors()];
    let mut eng = PathEngine::new(spec, &starts, start.z, cfg, path_index, 0);
    let level = LevelSet::for_spec(spec, a);
    Ok(stream_first_passage(&mut eng, &level, cfg.bridge_correction)
        .unwrap_or_else(|| HittingRecord::truncated(cfg.horizon, eng.n_steps)))
}

/// First passage to a level and the states at fixed times, from one streamed path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    /// `None` when no level was requested.
    pub passage: Option<HittingRecord>,
    /// State at each probe time; first factor's base point.
    pub states: Vec<TotalPoint>,
}

/// Streams one path from `start` (its base point repeated per factor) and records
/// the states at `times` together with the first passage to `level`.
///
/// Agrees with [`simulate_path`] followed by [`first_passage_vertical`] on the
/// same path index.
pub fn sample_path(
    spec: &SpaceSpec,
    start: &TotalPoint,
    level: Option<f64>,
    times: &[f64],
    cfg: &PathConfig,
    path_index: u64,
) -> Result<PathSample, SimError> {
    cfg.validate()?;
    check_start(spec, &start.base)?;
    let mut probes = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t <= cfg.horizon) {
            return Err(SimError::Config(format!("probe time {t} outside [0, {}]", cfg.horizon)));
        }
        probes.push(if t == 0.0 { 0 } else { n_steps(cfg.dt, t) });
    }
    if probes.windows(2).any(|w| w[1] < w[0]) {
        return Err(SimError::Config("probe times must be non-decreasing".into()));
    }
    let starts = vec![start.base; spec.n_factors()];
    let mut eng = PathEngine::new(spec, &starts, wrap_fiber(spec, start.z), cfg, path_index, 0);
    let level = level.map(|a| LevelSet::for_spec(spec, a));
    let mut passage = None;
    if let Some(l) = &level {
        if l.contains(eng.z_lift) {
            passage = Some(HittingRecord { hit: true, time: 0.0, crossing_index: 0, sub_step_fraction: 0.0 });
        }
    }
    let mut states = Vec::with_capacity(probes.len());
    let last = probes.last().copied().unwrap_or(0);
    loop {
        while states.len() < probes.len() && probes[states.len()] == eng.step {
            states.push(TotalPoint { base: eng.walkers[0].point(), z: wrap_fiber(spec, eng.z_lift) });
        }
        let searching = level.is_some() && passage.is_none();
        if eng.done() || (!searching && eng.step >= last) {
            break;
        }
        let adv = eng.advance();
        if let (Some(l), None) = (&level, &passage) {
            let bridge = if cfg.bridge_correction { Some(&mut eng.bridge) } else { None };
            if let Some(f) = l.crossing(adv.z0, adv.z1, adv.s1 - adv.s0, bridge) {
                passage = Some(HittingRecord::at(eng.step, &adv, f));
            }
        }
    }
    if level.is_some() && passage.is_none() {
        passage = Some(HittingRecord::truncated(cfg.horizon, eng.n_steps));
    }
    Ok(PathSample { passage, states })
}

/// Runs `f` for path indices `0..n` on the rayon pool; results are ordered by index.
pub fn run_batch<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests;
