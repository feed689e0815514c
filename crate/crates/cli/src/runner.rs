//! Runs a validated experiment and writes its CSV, SVG and manifest.

use crate::config::{start_for, Experiment, ExperimentConfig, FitLaw, Kind, Start};
use crate::output::{sha256_hex, write_file, Assertion, Manifest, OutputFile, Table};
use crate::plot::plot_from_csv;
use crate::verify::{gradient_catalog, su2_geometry_errors};
use coupling_lab_core::analytics::{
    clt_check_sl2, empirical_tail, empirical_tv_witness, exp_rate_fit, heisenberg_tail_bounds, heisenberg_tail_exact,
    hyperbolic_success_prob, ks_one_sample, levy_area_cdf, levy_area_density, nonisotropic_tail_bound, normal_cdf,
    power_law_fit, reflection_principle_check, vertical_gradient_estimates, ConvolvedDensity, DensityEstimate,
    Estimate, Observation, StatsError, TailCurve,
};
use coupling_lab_core::couplings::{
    invariant_area_difference, mirror_horizontal_coupling, nonisotropic_two_stage, two_stage_coupling,
    vertical_coupling_time, CouplingError,
};
use coupling_lab_core::model_spaces::{base_distance, Base, Fiber, OmegaPoint, SpaceSpec, TotalPoint};
use coupling_lab_core::sde_sim::{run_batch, sample_path, HittingRecord, PathSample, SimError};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("writing results")]
    Io(#[from] std::io::Error),
    #[error("plotting results")]
    Plot(#[from] crate::plot::PlotError),
}

/// In-memory result of an experiment.
#[derive(Clone, Debug, Default)]
pub struct RunResult {
    pub table: Table,
    pub summary: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    /// Plot the table on a logarithmic y axis.
    pub log_y: bool,
}

impl RunResult {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.assertions.push(Assertion { name: name.into(), pass, detail });
    }
}

/// Writes `<name>.csv`, `<name>.svg` and `manifest.json` into `out_dir`.
pub fn run_experiment(exp: &Experiment, out_dir: &Path) -> Result<Manifest<ExperimentConfig>, RunError> {
    let start = Instant::now();
    let res = execute(exp)?;
    let name = &exp.config.name;
    let csv = res.table.to_csv();
    let svg = plot_from_csv(&csv, res.log_y)?.to_svg();
    let mut outputs = Vec::new();
    for (file, bytes) in [(format!("{name}.csv"), csv), (format!("{name}.svg"), svg.into_bytes())] {
        write_file(&out_dir.join(&file), &bytes)?;
        outputs.push(OutputFile { path: file, sha256: sha256_hex(&bytes), rows: res.table.rows.len() });
    }
    let manifest = Manifest {
        name: name.clone(),
        anchor: exp.config.anchor.clone(),
        code_version: concat!("coupling-lab ", env!("CARGO_PKG_VERSION")).into(),
        config: exp.config.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs,
        pass: res.assertions.iter().all(|a| a.pass),
        summary: res.summary,
        assertions: res.assertions,
    };
    write_file(&out_dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

/// Dispatches on the experiment kind.
pub fn execute(exp: &Experiment) -> Result<RunResult, RunError> {
    match exp.config.kind {
        Kind::VerticalTail => vertical_tail(exp),
        Kind::TwoStageTail => two_stage_tail(exp),
        Kind::DensityHistogram => density_histogram(exp),
        Kind::TvWitness => tv_witness(exp),
        Kind::ReflectionPrinciple => reflection_principle(exp),
        Kind::CltCheck => clt_check(exp),
        Kind::ExpFit => exp_fit(exp),
        Kind::GradientBound => gradient_bound(exp),
        Kind::GeometryUnit => Ok(geometry_unit()),
        Kind::MirrorSuccess => mirror_success(exp),
    }
}

fn a_of(exp: &Experiment) -> f64 {
    exp.config.params.a.expect("validated")
}

fn is_heisenberg(spec: &SpaceSpec) -> bool {
    spec.base() == Base::Euclidean && spec.weights().is_none()
}

fn collect<T, E>(v: Vec<Result<T, E>>) -> Result<Vec<T>, RunError>
where
    RunError: From<E>,
{
    v.into_iter().map(|r| r.map_err(RunError::from)).collect()
}

fn samples(exp: &Experiment, start: &TotalPoint, level: Option<f64>, offset: u64) -> Result<Vec<PathSample>, RunError> {
    let grid = &exp.config.params.t_grid;
    collect(run_batch(exp.config.n_paths, |i| sample_path(&exp.spec, start, level, grid, &exp.path, offset + i)))
}

fn passage_curve(exp: &Experiment, a: f64) -> Result<TailCurve, RunError> {
    let o = TotalPoint::origin(&exp.spec);
    let cfg = &exp.path;
    let obs = collect(run_batch(exp.config.n_paths, |i| {
        sample_path(&exp.spec, &o, Some(a), &[], cfg, i).map(|s| Observation::from(&s.passage.expect("level set")))
    }))?;
    Ok(empirical_tail(&obs, &exp.config.params.t_grid))
}

fn vertical_tail(exp: &Experiment) -> Result<RunResult, RunError> {
    let (spec, a) = (&exp.spec, a_of(exp));
    let obs = collect(run_batch(exp.config.n_paths, |i| {
        vertical_coupling_time(spec, a, &exp.path, i).map(|o| Observation { time: o.coupling_time, event: o.coupled })
    }))?;
    let curve = empirical_tail(&obs, &exp.config.params.t_grid);
    let mut res = RunResult {
        table: Table::new(&["t", "survival", "stderr", "exact", "lower_bound", "upper_bound"]),
        ..Default::default()
    };
    let (mut worst_exact, mut worst_bound) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &t) in curve.t_grid.iter().enumerate() {
        let e = curve.at(i);
        let (exact, lower, upper) = match spec.weights() {
            None if is_heisenberg(spec) => {
                let (lo, up) = heisenberg_tail_bounds(a, t);
                (Some(heisenberg_tail_exact(a, t)), Some(lo.max(0.0)), Some(up))
            }
            Some(w) => (None, None, Some(nonisotropic_tail_bound(w, a, t))),
            None => (None, None, None),
        };
        if let Some(x) = exact {
            worst_exact = worst_exact.max((e.value - x).abs() - 3.0 * e.se - 0.005);
        }
        if let Some(u) = upper {
            worst_bound = worst_bound.max(e.value - u - 3.0 * e.se);
        }
        res.table.push(vec![t.into(), e.value.into(), e.se.into(), exact.into(), lower.into(), upper.into()]);
    }
    if worst_exact.is_finite() {
        res.check(
            "matches (4/π)atan(tanh(πa/2t))",
            worst_exact <= 0.0,
            format!("worst slack {worst_exact:+.5} beyond 3 SE + 0.005"),
        );
    }
    if worst_bound.is_finite() {
        res.check("below the upper bound", worst_bound <= 0.0, format!("worst excess {worst_bound:+.5} beyond 3 SE"));
    }
    res.summary.insert("truncated_fraction".into(), curve.n_truncated as f64 / curve.n_samples as f64);
    Ok(res)
}

fn two_stage_tail(exp: &Experiment) -> Result<RunResult, RunError> {
    let spec = &exp.spec;
    let p = &exp.config.params;
    let s1 = start_for(spec, p.start1.as_ref(), "params.start1").expect("validated");
    let s2 = start_for(spec, p.start2.as_ref(), "params.start2").expect("validated");
    let outs = match (&s1, &s2) {
        (Start::Single(a), Start::Single(b)) => {
            collect(run_batch(exp.config.n_paths, |i| two_stage_coupling(spec, a, b, &exp.path, i)))?
        }
        (Start::Product(a), Start::Product(b)) => {
            let w = spec.weights().expect("product starts only on weighted spaces");
            collect(run_batch(exp.config.n_paths, |i| nonisotropic_two_stage(w, a, b, &exp.path, i)))?
        }
        _ => unreachable!("both starts follow the same space"),
    };
    let obs: Vec<Observation> = outs.iter().map(|o| Observation { time: o.coupling_time, event: o.coupled }).collect();
    let curve = empirical_tail(&obs, &p.t_grid);
    // Horizontal and invariant vertical separation of Heisenberg starts.
    let hv = match (&s1, &s2) {
        (Start::Single(a), Start::Single(b)) if is_heisenberg(spec) => {
            let omega = |q: &TotalPoint| {
                let e = q.base.embedded();
                OmegaPoint { xy: vec![[e[0], e[1]]], z: q.z }
            };
            Some((base_distance(spec, &a.base, &b.base), invariant_area_difference(&[1.0], &omega(a), &omega(b)).abs()))
        }
        _ => None,
    };
    let mut res = RunResult { table: Table::new(&["t", "survival", "stderr", "scaled"]), ..Default::default() };
    let mut worst = f64::NEG_INFINITY;
    for (i, &t) in curve.t_grid.iter().enumerate() {
        let scaled = hv.filter(|(h, _)| *h > 0.0).map(|(h, v)| {
            let f = (t.sqrt() / h).min(if v > 0.0 { t / v } else { f64::INFINITY });
            curve.survival[i] * f
        });
        if let (Some(s), Some((h, v))) = (scaled, hv) {
            if t >= (h * h).max(2.0 * v) + 1.0 {
                worst = worst.max(s);
            }
        }
        res.table.push(vec![t.into(), curve.survival[i].into(), curve.stderr[i].into(), scaled.into()]);
    }
    if worst.is_finite() {
        res.check("P(τ>t)·min(√t/h, t/|v|) <= 10", worst <= 10.0, format!("max {worst:.4}"));
    }
    let n = outs.len() as f64;
    res.summary.insert("stage1_fraction".into(), outs.iter().filter(|o| o.stage1_time.is_some()).count() as f64 / n);
    res.summary.insert("coupled_fraction".into(), outs.iter().filter(|o| o.coupled).count() as f64 / n);
    Ok(res)
}

fn density_histogram(exp: &Experiment) -> Result<RunResult, RunError> {
    let spec = &exp.spec;
    let p = &exp.config.params;
    let t = *p.t_grid.last().expect("validated");
    let o = TotalPoint::origin(spec);
    let z: Vec<f64> = collect(run_batch(exp.config.n_paths, |i| {
        sample_path(spec, &o, None, &[t], &exp.path, i).map(|s| s.states[0].z)
    }))?;
    let width = spec.factor_weights().iter().cloned().fold(0.0, f64::max) * t;
    let (lo, hi) = match spec.fiber() {
        Fiber::Line => (-4.0 * width, 4.0 * width),
        Fiber::Circle => (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI),
    };
    let hist = DensityEstimate::from_samples(&z, lo, hi, p.bins.unwrap_or(80));
    let conv = spec.weights().map(|w| ConvolvedDensity::new(w, t));
    let reference = |x: f64| match (&conv, is_heisenberg(spec)) {
        (Some(c), _) => Some(c.density(x)),
        (None, true) => Some(levy_area_density(t, x)),
        _ => None,
    };
    let mut res = RunResult { table: Table::new(&["z", "density", "reference"]), ..Default::default() };
    for (c, h) in hist.centers().into_iter().zip(&hist.heights) {
        res.table.push(vec![c.into(), (*h).into(), reference(c).into()]);
    }
    let m = Estimate::mean_of(z.iter().copied());
    res.summary.insert("mean".into(), m.value);
    res.summary.insert("variance".into(), m.se * m.se * z.len() as f64);
    let ks = match (&conv, is_heisenberg(spec)) {
        (Some(c), _) => Some(ks_one_sample(&z, |x| c.cdf(x))?),
        (None, true) => Some(ks_one_sample(&z, |x| levy_area_cdf(t, x))?),
        _ => None,
    };
    if let Some(ks) = ks {
        // The larger of the desk-scale tolerance and the 1% critical value.
        let tol = 0.012f64.max(1.63 / (z.len() as f64).sqrt());
        res.summary.insert("ks_statistic".into(), ks.statistic);
        res.summary.insert("ks_p_value".into(), ks.p_value);
        res.check("KS against the reference law", ks.statistic <= tol, format!("{:.5} <= {tol:.5}", ks.statistic));
    }
    Ok(res)
}

fn alive(h: &HittingRecord, t: f64) -> bool {
    !(h.hit && h.time <= t)
}

fn tv_witness(exp: &Experiment) -> Result<RunResult, RunError> {
    let (spec, a) = (&exp.spec, a_of(exp));
    let o = TotalPoint::origin(spec);
    let up = TotalPoint::new(spec, o.base, 2.0 * a);
    let primary = samples(exp, &o, Some(a), 0)?;
    let partner = samples(exp, &up, None, exp.config.n_paths)?;
    let mut res = RunResult {
        table: Table::new(&["t", "tail", "tail_stderr", "witness", "witness_stderr", "exact"]),
        ..Default::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for (k, &t) in exp.config.params.t_grid.iter().enumerate() {
        let n_alive = primary.iter().filter(|s| alive(s.passage.as_ref().expect("level set"), t)).count();
        let tail = Estimate::proportion(n_alive, primary.len());
        let p: Vec<TotalPoint> = primary.iter().map(|s| s.states[k]).collect();
        let q: Vec<TotalPoint> = partner.iter().map(|s| s.states[k]).collect();
        let w = empirical_tv_witness(spec, a, &p, &q);
        worst = worst.max((tail.value - w.value).abs() - 3.0 * tail.se.hypot(w.se) - 0.005);
        let exact = is_heisenberg(spec).then(|| heisenberg_tail_exact(a, t));
        res.table.push(vec![t.into(), tail.value.into(), tail.se.into(), w.value.into(), w.se.into(), exact.into()]);
    }
    res.check("tail equals witness", worst <= 0.0, format!("worst slack {worst:+.5} beyond 3 SE + 0.005"));
    Ok(res)
}

fn reflection_principle(exp: &Experiment) -> Result<RunResult, RunError> {
    let (spec, a) = (&exp.spec, a_of(exp));
    let primary = samples(exp, &TotalPoint::origin(spec), Some(a), 0)?;
    let mut res = RunResult { table: Table::new(&["t", "tail", "discrepancy", "stderr"]), ..Default::default() };
    let mut worst = 0.0f64;
    for (k, &t) in exp.config.params.t_grid.iter().enumerate() {
        let pairs: Vec<(HittingRecord, TotalPoint)> =
            primary.iter().map(|s| (s.passage.expect("level set"), s.states[k])).collect();
        let d = reflection_principle_check(spec, a, t, &pairs);
        let tail = pairs.iter().filter(|(h, _)| alive(h, t)).count() as f64 / pairs.len() as f64;
        worst = worst.max(d.value.abs() / d.se.max(f64::MIN_POSITIVE));
        res.table.push(vec![t.into(), tail.into(), d.value.into(), d.se.into()]);
    }
    res.check("P(σ>t) = 1 - 2P(z_t in S+)", worst <= 3.0, format!("worst {worst:.2} SE"));
    Ok(res)
}

fn clt_check(exp: &Experiment) -> Result<RunResult, RunError> {
    let spec = &exp.spec;
    let t = *exp.config.params.t_grid.last().expect("validated");
    let o = TotalPoint::origin(spec);
    let z: Vec<f64> = collect(run_batch(exp.config.n_paths, |i| {
        sample_path(spec, &o, None, &[t], &exp.path, i).map(|s| s.states[0].z)
    }))?;
    let c = clt_check_sl2(&z, t)?;
    let mut sorted: Vec<f64> = z.iter().map(|v| v / t.sqrt()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut res = RunResult { table: Table::new(&["x", "empirical_cdf", "normal_cdf"]), ..Default::default() };
    for k in 0..=60 {
        let x = -3.0 + 0.1 * k as f64;
        let f = sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64;
        res.table.push(vec![x.into(), f.into(), normal_cdf(x).into()]);
    }
    res.summary.insert("ks_statistic".into(), c.ks.statistic);
    res.summary.insert("ks_p_value".into(), c.ks.p_value);
    res.summary.insert("worst_margin_se".into(), c.worst_margin_se);
    res.check("KS(z_t/√t, Φ) <= 0.05", c.ks.statistic <= 0.05, format!("{:.5}", c.ks.statistic));
    res.check("F_t(x) >= Φ(x) - 3 SE on [0, 2]", c.dominates, format!("min margin {:.2} SE", c.worst_margin_se));
    Ok(res)
}

fn exp_fit(exp: &Experiment) -> Result<RunResult, RunError> {
    let p = &exp.config.params;
    let curve = passage_curve(exp, a_of(exp))?;
    let w = p.window.expect("validated");
    let law = p.law.unwrap_or(FitLaw::Exponential);
    let fit = match law {
        FitLaw::Exponential => exp_rate_fit(&curve, (w[0], w[1]))?,
        FitLaw::Power => power_law_fit(&curve, (w[0], w[1]))?,
    };
    let mut res =
        RunResult { table: Table::new(&["t", "survival", "stderr", "fitted"]), log_y: true, ..Default::default() };
    for (i, &t) in curve.t_grid.iter().enumerate() {
        let fitted = match law {
            FitLaw::Exponential => fit.prefactor * (-fit.rate * t).exp(),
            FitLaw::Power => fit.prefactor * t.powf(-fit.rate),
        };
        res.table.push(vec![t.into(), curve.survival[i].into(), curve.stderr[i].into(), fitted.into()]);
    }
    res.summary.insert("rate".into(), fit.rate);
    res.summary.insert("prefactor".into(), fit.prefactor);
    res.summary.insert("r_squared".into(), fit.r_squared);
    res.summary.insert("fit_points".into(), fit.n_points as f64);
    res.check("positive rate", fit.rate > 0.0, format!("{:.5}", fit.rate));
    res.check("R² >= 0.98", fit.r_squared >= 0.98, format!("{:.5}", fit.r_squared));
    Ok(res)
}

fn gradient_bound(exp: &Experiment) -> Result<RunResult, RunError> {
    let (spec, a) = (&exp.spec, a_of(exp));
    let p = &exp.config.params;
    let fs = if p.functions.is_empty() { gradient_catalog(a) } else { p.functions.clone() };
    let mut res =
        RunResult { table: Table::new(&["t", "function", "estimate", "stderr", "bound"]), ..Default::default() };
    let mut worst = f64::NEG_INFINITY;
    for &t in &p.t_grid {
        let est = vertical_gradient_estimates(spec, &fs, t, a, &exp.path, exp.config.n_paths)?;
        for (f, e) in fs.iter().zip(est) {
            let bound = f.sup_norm() / t;
            let allowed = bound * (1.0 + if e.value > 0.0 { 5.0 * e.se / e.value } else { 0.0 });
            worst = worst.max(e.value - allowed);
            res.table.push(vec![t.into(), f.name().into(), e.value.into(), e.se.into(), bound.into()]);
        }
    }
    res.check("estimate <= ‖f‖/t (1 + 5 SE/estimate)", worst <= 0.0, format!("worst excess {worst:+.5}"));
    Ok(res)
}

fn geometry_unit() -> RunResult {
    let (plane, algebra, fibers) = su2_geometry_errors();
    let mut res = RunResult {
        table: Table::new(&["index", "check", "max_error", "tolerance", "pass"]),
        log_y: true,
        ..Default::default()
    };
    for (k, (name, err, tol)) in [
        ("equidistant sphere <p,N_a> = 0", plane, 1e-12),
        ("T_b orthogonal involution", algebra, 1e-12),
        ("T_b maps fibers to fibers", fibers, 1e-10),
    ]
    .into_iter()
    .enumerate()
    {
        res.table.push(vec![(k as f64).into(), name.into(), err.into(), tol.into(), (err <= tol).into()]);
        res.check(name, err <= tol, format!("{err:.3e} <= {tol:e}"));
    }
    res
}

fn mirror_success(exp: &Experiment) -> Result<RunResult, RunError> {
    let spec = &exp.spec;
    let p = &exp.config.params;
    let single = |s: Start| match s {
        Start::Single(q) => q.base,
        Start::Product(_) => unreachable!("validated single-factor"),
    };
    let s1 = single(start_for(spec, p.start1.as_ref(), "params.start1").expect("validated"));
    let s2 = single(start_for(spec, p.start2.as_ref(), "params.start2").expect("validated"));
    let outs = collect(run_batch(exp.config.n_paths, |i| {
        mirror_horizontal_coupling(spec, &s1, &s2, &exp.path, i).map(|m| m.horizontal)
    }))?;
    let obs: Vec<Observation> = outs.iter().map(|o| Observation { time: o.meeting_time, event: o.coupled }).collect();
    let curve = empirical_tail(&obs, &p.t_grid);
    let half = 0.5 * base_distance(spec, &s1, &s2);
    let mut res = RunResult { table: Table::new(&["t", "uncoupled", "stderr", "exact"]), ..Default::default() };
    let mut worst = f64::NEG_INFINITY;
    for (i, &t) in curve.t_grid.iter().enumerate() {
        let exact = (spec.base() == Base::Euclidean).then(|| 2.0 * normal_cdf(half / t.sqrt()) - 1.0);
        if let Some(x) = exact {
            worst = worst.max((curve.survival[i] - x).abs() - 3.0 * curve.stderr[i] - 0.005);
        }
        res.table.push(vec![t.into(), curve.survival[i].into(), curve.stderr[i].into(), exact.into()]);
    }
    let n = outs.len();
    let success = Estimate::proportion(outs.iter().filter(|o| o.coupled).count(), n);
    res.summary.insert("success".into(), success.value);
    res.summary.insert("success_stderr".into(), success.se);
    res.summary.insert("escaped_fraction".into(), outs.iter().filter(|o| o.escaped).count() as f64 / n as f64);
    res.summary.insert("truncated_fraction".into(), outs.iter().filter(|o| o.truncated).count() as f64 / n as f64);
    if worst.is_finite() {
        res.check("uncoupled = 2Φ(h/√t) - 1", worst <= 0.0, format!("worst slack {worst:+.5} beyond 3 SE + 0.005"));
    }
    if spec.base() == Base::Hyperbolic {
        let exact = hyperbolic_success_prob(half);
        res.summary.insert("exact_success".into(), exact);
        res.check(
            "success = 1 - (4/π)atan(tanh(r/2))",
            (success.value - exact).abs() <= 0.02,
            format!("{:.4} vs {exact:.4}", success.value),
        );
    }
    Ok(res)
}
