//! Empirical tails, densities, witness sets and fitted decay laws.

use super::closed_form::normal_cdf;
use super::stats::{fit_line, ks_one_sample, Estimate, KsResult, StatsError};
use crate::model_spaces::{hemisphere_sign, su2_cyl_to_r4, Base, Fiber, SpaceSpec, TotalPoint};
use crate::sde_sim::HittingRecord;
use serde::Serialize;
use std::f64::consts::TAU;

/// A possibly right-censored event time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub time: f64,
    /// `false` when the run was truncated before the event.
    pub event: bool,
}

impl From<&HittingRecord> for Observation {
    fn from(h: &HittingRecord) -> Self {
        Observation { time: h.time, event: h.hit }
    }
}

/// Survival estimates on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCurve {
    pub t_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub n_truncated: usize,
}

/// `P̂(T > t)` on `t_grid`; censored observations count as surviving everywhere.
pub fn empirical_tail(obs: &[Observation], t_grid: &[f64]) -> TailCurve {
    let n = obs.len();
    let mut events: Vec<f64> = obs.iter().filter(|o| o.event).map(|o| o.time).collect();
    events.sort_by(f64::total_cmp);
    let (survival, stderr) = t_grid
        .iter()
        .map(|&t| {
            let done = events.partition_point(|&e| e <= t);
            let e = Estimate::proportion(n - done, n.max(1));
            (e.value, e.se)
        })
        .unzip();
    TailCurve {
        t_grid: t_grid.to_vec(),
        survival,
        stderr,
        n_samples: n,
        n_truncated: obs.iter().filter(|o| !o.event).count(),
    }
}

impl TailCurve {
    pub fn at(&self, i: usize) -> Estimate {
        Estimate { value: self.survival[i], se: self.stderr[i] }
    }
}

/// Histogram normalized so that heights integrate to the in-range fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub heights: Vec<f64>,
    pub n: usize,
}

impl DensityEstimate {
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let w = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if x >= lo && x < hi {
                counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
            }
        }
        let n = samples.len();
        let heights = counts.iter().map(|&c| c as f64 / (n as f64 * w)).collect();
        DensityEstimate { edges, counts, heights, n }
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// Membership in the witness set `S⁻` around the start fiber: `{z < a}`,
/// the semicircle `(a − 2π, a)`, or the hemisphere of `S³` containing the identity.
pub fn in_lower_set(spec: &SpaceSpec, a: f64, p: &TotalPoint) -> bool {
    match (spec.base(), spec.fiber()) {
        (_, Fiber::Line) => p.z < a,
        (Base::Spherical, _) => hemisphere_sign(a, &su2_cyl_to_r4(p.base.r(), p.base.theta(), p.z)) < 0,
        _ => p.z > a - TAU && p.z < a,
    }
}

/// Membership in `S⁺`, the set on the far side of the equidistant set.
pub fn in_upper_set(spec: &SpaceSpec, a: f64, p: &TotalPoint) -> bool {
    match (spec.base(), spec.fiber()) {
        (_, Fiber::Line) => p.z >= a,
        (Base::Spherical, _) => hemisphere_sign(a, &su2_cyl_to_r4(p.base.r(), p.base.theta(), p.z)) > 0,
        _ => !(p.z >= a - TAU && p.z <= a),
    }
}

/// `P̂(B_t ∈ S⁻) − P̂(B̃_t ∈ S⁻)` from independent samples of the two laws.
pub fn empirical_tv_witness(spec: &SpaceSpec, a: f64, primary: &[TotalPoint], partner: &[TotalPoint]) -> Estimate {
    let frac =
        |xs: &[TotalPoint]| Estimate::proportion(xs.iter().filter(|p| in_lower_set(spec, a, p)).count(), xs.len());
    let (p, q) = (frac(primary), frac(partner));
    Estimate { value: p.value - q.value, se: p.se.hypot(q.se) }
}

/// Same witness from coupled pairs, with the standard error of the paired differences.
pub fn paired_tv_witness(spec: &SpaceSpec, a: f64, pairs: &[(TotalPoint, TotalPoint)]) -> Estimate {
    let ind = |p: &TotalPoint| if in_lower_set(spec, a, p) { 1.0 } else { 0.0 };
    Estimate::mean_of(pairs.iter().map(|(p, q)| ind(p) - ind(q)))
}

/// `P̂(σ_a > t) − (1 − 2P̂(z_t ∈ S⁺))` over matched paths, with the standard error
/// of the per-path summand.
pub fn reflection_principle_check(
    spec: &SpaceSpec,
    a: f64,
    t: f64,
    samples: &[(HittingRecord, TotalPoint)],
) -> Estimate {
    Estimate::mean_of(samples.iter().map(|(h, p)| {
        let alive = if h.hit && h.time <= t { 0.0 } else { 1.0 };
        let up = if in_upper_set(spec, a, p) { 1.0 } else { 0.0 };
        alive - 1.0 + 2.0 * up
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltCheck {
    pub ks: KsResult,
    /// `min over x ∈ [0, 2] of (F̂(x) − Φ(x)) / SE(x)`.
    pub worst_margin_se: f64,
    /// Whether `F̂(x) ≥ Φ(x) − 3·SE` on the whole grid.
    pub dominates: bool,
}

/// Compares `z_t/√t` with the standard normal law.
pub fn clt_check_sl2(z: &[f64], t: f64) -> Result<CltCheck, StatsError> {
    let scaled: Vec<f64> = z.iter().map(|v| v / t.sqrt()).collect();
    let ks = ks_one_sample(&scaled, normal_cdf)?;
    let mut sorted = scaled;
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst = f64::INFINITY;
    for k in 0..=40 {
        let x = 0.05 * k as f64;
        let f = sorted.partition_point(|&v| v <= x) as f64 / n;
        let phi = normal_cdf(x);
        let se = (phi * (1.0 - phi) / n).sqrt();
        worst = worst.min((f - phi) / se);
    }
    Ok(CltCheck { ks, worst_margin_se: worst, dominates: worst >= -3.0 })
}

/// Fitted decay law on a window of a tail curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    /// `c` in `Ce^{−ct}`, or `p` in `Ct^{−p}`.
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

fn window_points(curve: &TailCurve, window: (f64, f64), logx: bool) -> Vec<(f64, f64)> {
    let floor = 10.0 / curve.n_samples.max(1) as f64;
    curve
        .t_grid
        .iter()
        .zip(&curve.survival)
        .filter(|(t, s)| **t >= window.0 && **t <= window.1 && **s >= floor && **s > 0.0)
        .map(|(t, s)| (if logx { t.ln() } else { *t }, s.ln()))
        .collect()
}

/// Least squares of `log S` against `t`; points below `10/N` are dropped.
pub fn exp_rate_fit(curve: &TailCurve, window: (f64, f64)) -> Result<FitResult, StatsError> {
    let pts = window_points(curve, window, false);
    let f = fit_line(&pts)?;
    Ok(FitResult { rate: -f.slope, prefactor: f.intercept.exp(), r_squared: f.r_squared, window, n_points: pts.len() })
}

/// Least squares of `log S` against `log t`.
pub fn power_law_fit(curve: &TailCurve, window: (f64, f64)) -> Result<FitResult, StatsError> {
    let pts = window_points(curve, window, true);
    let f = fit_line(&pts)?;
    Ok(FitResult { rate: -f.slope, prefactor: f.intercept.exp(), r_squared: f.r_squared, window, n_points: pts.len() })
}
