use super::*;
use crate::analytics::{heisenberg_tail_exact, ks_one_sample, ks_two_sample, levy_area_density, ConvolvedDensity};
use crate::model_spaces::{Base, Fiber};
use std::f64::consts::{PI, TAU};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn last_z(spec: &SpaceSpec, cfg: &PathConfig, n: u64) -> Vec<f64> {
    let start = TotalPoint::origin(spec);
    run_batch(n, |i| *simulate_path(spec, &start, cfg, i).unwrap().z.last().unwrap())
}

#[test]
fn step_base_drift_example() {
    let spec = SpaceSpec::heisenberg();
    let p = BasePoint::from_polar(Base::Euclidean, 1.0, 0.0).unwrap();
    let q = step_base(&spec, &p, 0.0, 0.0, 0.01);
    assert!((q.r() - 1.005).abs() < 1e-12 && q.theta().abs() < 1e-12);
}

#[test]
fn step_base_respects_the_sphere() {
    let spec = SpaceSpec::su2();
    let mut g = rng_stream(4, 0, 0);
    for k in 0..200 {
        let r = PI - 1e-4 * (1 + k % 7) as f64;
        let p = BasePoint::from_polar(Base::Spherical, r, 0.1 * k as f64).unwrap();
        let q = step_base(&spec, &p, 0.03 * g.gaussian(), 0.03 * g.gaussian(), 1e-3);
        let v = q.embedded();
        assert!(q.r() <= PI);
        assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn euclidean_endpoint_is_standard_normal() {
    let spec = SpaceSpec::heisenberg();
    let cfg = PathConfig::new(0.01, 1.0, 17);
    let start = TotalPoint::origin(&spec);
    let n = 100_000;
    let pts = run_batch(n, |i| simulate_path(&spec, &start, &cfg, i).unwrap().base.last().unwrap().embedded());
    let nf = n as f64;
    let (mx, my) = (pts.iter().map(|p| p[0]).sum::<f64>() / nf, pts.iter().map(|p| p[1]).sum::<f64>() / nf);
    let cov = |i: usize, j: usize, mi: f64, mj: f64| pts.iter().map(|p| (p[i] - mi) * (p[j] - mj)).sum::<f64>() / nf;
    assert!(mx.abs() < 0.02 && my.abs() < 0.02, "{mx} {my}");
    assert!((cov(0, 0, mx, mx) - 1.0).abs() < 0.02);
    assert!((cov(1, 1, my, my) - 1.0).abs() < 0.02);
    assert!(cov(0, 1, mx, my).abs() < 0.02);
}

fn mean_clock(spec: &SpaceSpec, n: u64) -> (f64, f64) {
    let cfg = PathConfig::new(1e-3, 1.0, 23);
    let s = run_batch(n, |i| *simulate_bessel_clock(spec, 0.0, &cfg, i).unwrap().clock.last().unwrap());
    let m = s.iter().sum::<f64>() / n as f64;
    let v = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, (v / n as f64).sqrt())
}

#[test]
fn heisenberg_clock_mean() {
    let (m, se) = mean_clock(&SpaceSpec::heisenberg(), 20_000);
    // E r_s² = 2s for the planar Bessel process from 0.
    let oracle = simpson(|s| 2.0 * s / 4.0, 0.0, 1.0, 100);
    assert!((oracle - 0.25).abs() < 1e-14);
    assert!((m - oracle).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn weighted_clock_mean() {
    let w = [1.0, 2.0];
    let spec = SpaceSpec::nonisotropic(w.to_vec()).unwrap();
    let (m, se) = mean_clock(&spec, 20_000);
    let oracle = simpson(|s| w.iter().map(|a| a * a * 2.0 * s).sum::<f64>() / 4.0, 0.0, 1.0, 100);
    assert!((oracle - 1.25).abs() < 1e-14);
    assert!((m - oracle).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn heisenberg_area_variance() {
    let spec = SpaceSpec::heisenberg();
    let z = last_z(&spec, &PathConfig::new(1e-3, 1.0, 29), 100_000);
    let n = z.len() as f64;
    let m2 = z.iter().map(|v| v * v).sum::<f64>() / n;
    let m4 = z.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    let se = ((m4 - m2 * m2) / n).sqrt();
    let oracle = simpson(|y| y * y * levy_area_density(1.0, y), -40.0, 40.0, 200_000);
    assert!((oracle - 1.0 / 4.0).abs() < 1e-9, "sech law variance (1/t)∫z²sech(πz/t) = t²/4");
    assert!((m2 - oracle).abs() < 3.0 * se, "{m2} vs {oracle} ± {se}");
}

#[test]
fn circle_start_keeps_boundary_convention() {
    let spec = SpaceSpec::sl2();
    let start = TotalPoint::new(&spec, BasePoint::origin(Base::Hyperbolic), TAU);
    let tr = simulate_path(&spec, &start, &PathConfig::new(1e-3, 0.1, 1), 0).unwrap();
    assert_eq!(tr.z[0], TAU);
    assert!(tr.z.iter().all(|&z| z > -TAU && z <= TAU));
}

#[test]
fn trajectory_grid_and_clock() {
    for spec in [SpaceSpec::heisenberg(), SpaceSpec::sl2_universal(), SpaceSpec::sl2(), SpaceSpec::su2()] {
        let cfg = PathConfig::new(1e-3, 0.9995, 7);
        let tr = simulate_path(&spec, &TotalPoint::origin(&spec), &cfg, 3).unwrap();
        assert_eq!(tr.len(), 1001);
        assert_eq!(tr.clock[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), 0.9995);
        for w in tr.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in tr.clock.windows(2) {
            assert!(w[1] >= w[0]);
        }
        if spec.fiber() == Fiber::Circle {
            assert!(tr.z.iter().all(|&z| z > -TAU && z <= TAU));
        }
    }
}

#[test]
fn bessel_clock_is_non_decreasing() {
    let spec = SpaceSpec::su2();
    let cfg = PathConfig::new(1e-3, 2.0, 3);
    for i in 0..20 {
        let c = simulate_bessel_clock(&spec, 0.5, &cfg, i).unwrap();
        assert!(c.clock.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(c.clock[0], 0.0);
    }
}

#[test]
fn quadratic_variation_matches_clock() {
    for spec in [SpaceSpec::heisenberg(), SpaceSpec::sl2_universal()] {
        // Relative fluctuation of the realized variance is about √(2/n); 10⁵ steps keep it near 1%.
        let cfg = PathConfig::new(1e-4, 10.0, 31);
        for i in 0..5 {
            let tr = simulate_path(&spec, &TotalPoint::origin(&spec), &cfg, i).unwrap();
            let qv: f64 = tr.z_lift.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
            let s = *tr.clock.last().unwrap();
            assert!((qv / s - 1.0).abs() < 0.05, "{} path {i}: {qv} vs {s}", spec.name());
        }
    }
}

#[test]
fn polar_and_embedded_schemes_agree() {
    let spec = SpaceSpec::heisenberg();
    let a = last_z(&spec, &PathConfig::new(1e-3, 1.0, 41), 100_000);
    let b = last_z(&spec, &PathConfig::new(1e-3, 1.0, 43).with_scheme(Scheme::PolarEM), 100_000);
    let ks = ks_two_sample(&a, &b).unwrap();
    assert!(ks.statistic <= 0.01, "{ks:?}");
}

#[test]
fn sphere_paths_stay_on_the_sphere() {
    let spec = SpaceSpec::su2();
    let cfg = PathConfig::new(1e-3, 5.0, 9);
    for i in 0..4 {
        let tr = simulate_path(&spec, &TotalPoint::origin(&spec), &cfg, i).unwrap();
        let worst = tr
            .base
            .iter()
            .map(|p| {
                let v = p.embedded();
                ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = SpaceSpec::sl2();
    let cfg = PathConfig::new(1e-3, 0.5, 77);
    let start = TotalPoint::origin(&spec);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_batch(24, |i| simulate_path(&spec, &start, &cfg, i).unwrap()))
    };
    let (a, b) = (run(1), run(4));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(
            x.z_lift.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.z_lift.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(x.base, y.base);
        assert_eq!(x.clock, y.clock);
    }
}

#[test]
fn heisenberg_first_passage_tail() {
    let spec = SpaceSpec::heisenberg();
    let cfg = PathConfig::new(1e-3, 2.0, 51);
    let start = TotalPoint::origin(&spec);
    let n = 50_000;
    let recs = run_batch(n, |i| simulate_first_passage(&spec, &start, 1.0, &cfg, i).unwrap());
    let alive = recs.iter().filter(|r| !r.hit).count() as f64 / n as f64;
    let exact = heisenberg_tail_exact(1.0, 2.0);
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((alive - exact).abs() <= 3.0 * se + 0.005, "{alive} vs {exact}");
    assert!(recs.iter().all(|r| r.hit || r.time == 2.0));
}

#[test]
fn refining_dt_keeps_the_tail() {
    let spec = SpaceSpec::heisenberg();
    let start = TotalPoint::origin(&spec);
    let n = 20_000;
    let tail = |dt: f64| {
        let cfg = PathConfig::new(dt, 2.0, 61);
        let k = run_batch(n, |i| simulate_first_passage(&spec, &start, 1.0, &cfg, i).unwrap())
            .iter()
            .filter(|r| !r.hit)
            .count();
        k as f64 / n as f64
    };
    let (coarse, fine) = (tail(2e-3), tail(1e-3));
    let se = (coarse * (1.0 - coarse) / n as f64 + fine * (1.0 - fine) / n as f64).sqrt();
    assert!((coarse - fine).abs() <= 2.0 * se, "{coarse} {fine} ± {se}");
}

#[test]
fn stored_and_streamed_first_passage_agree() {
    for spec in [SpaceSpec::heisenberg(), SpaceSpec::sl2(), SpaceSpec::su2()] {
        let cfg = PathConfig::new(1e-3, 3.0, 13);
        let start = TotalPoint::origin(&spec);
        for i in 0..20 {
            let tr = simulate_path(&spec, &start, &cfg, i).unwrap();
            let a = first_passage_vertical(&spec, &tr, 0.5, &cfg);
            let b = simulate_first_passage(&spec, &start, 0.5, &cfg, i).unwrap();
            assert_eq!(a, b, "{} path {i}", spec.name());
        }
    }
}

#[test]
fn sampled_path_matches_stored_path() {
    for spec in [SpaceSpec::heisenberg(), SpaceSpec::sl2(), SpaceSpec::su2()] {
        let cfg = PathConfig::new(1e-3, 3.0, 13);
        let start = TotalPoint::new(&spec, BasePoint::origin(spec.base()), 0.25);
        for i in 0..20 {
            let tr = simulate_path(&spec, &start, &cfg, i).unwrap();
            let s = sample_path(&spec, &start, Some(0.5), &[0.0, 1.0, 3.0], &cfg, i).unwrap();
            assert_eq!(s.passage, Some(first_passage_vertical(&spec, &tr, 0.5, &cfg)));
            for (k, step) in [0, 1000, 3000].into_iter().enumerate() {
                assert_eq!(s.states[k], tr.total_point(step), "{} path {i}", spec.name());
            }
            let free = sample_path(&spec, &start, None, &[1.0], &cfg, i).unwrap();
            assert_eq!((free.passage, free.states[0]), (None, tr.total_point(1000)));
        }
    }
    let spec = SpaceSpec::heisenberg();
    let cfg = PathConfig::new(1e-3, 1.0, 1);
    assert!(sample_path(&spec, &TotalPoint::origin(&spec), None, &[2.0], &cfg, 0).is_err());
    assert!(sample_path(&spec, &TotalPoint::origin(&spec), None, &[0.5, 0.2], &cfg, 0).is_err());
}

fn synthetic(z: Vec<f64>) -> Trajectory {
    let n = z.len();
    Trajectory {
        times: (0..n).map(|i| i as f64 * 0.1).collect(),
        base: vec![BasePoint::origin(Base::Euclidean); n],
        z_lift: z.clone(),
        z,
        clock: (0..n).map(|i| i as f64 * 0.01).collect(),
        n_factors: 1,
        path_index: 0,
    }
}

#[test]
fn first_passage_on_synthetic_paths() {
    let spec = SpaceSpec::heisenberg();
    let cfg = PathConfig::new(0.1, 0.5, 0);
    let below = synthetic(vec![0.0, -3.0, -4.0, -3.5, -5.0, -6.0]);
    let r = first_passage_vertical(&spec, &below, 1.0, &cfg);
    assert!(!r.hit && r.time == 0.5);
    let on_grid = synthetic(vec![0.0, 0.4, 1.0, 0.7]);
    let r = first_passage_vertical(&spec, &on_grid, 1.0, &PathConfig { bridge_correction: false, ..cfg.clone() });
    assert!(r.hit && (r.time - 0.2).abs() < 1e-15 && r.crossing_index == 2);
}

#[test]
fn nonisotropic_area_matches_convolution() {
    let w = vec![1.0, 1.0];
    let cfg = PathConfig::new(1e-3, 1.0, 71);
    let start = OmegaPoint::identity(2);
    let z = run_batch(20_000, |i| *simulate_path_omega(&w, &start, &cfg, i).unwrap().z.last().unwrap());
    let d = ConvolvedDensity::new(&w, 1.0);
    let ks = ks_one_sample(&z, |x| d.cdf(x)).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn product_path_with_one_unit_weight_is_heisenberg() {
    let cfg = PathConfig::new(1e-3, 1.0, 5);
    let a = simulate_path(&SpaceSpec::heisenberg(), &TotalPoint::origin(&SpaceSpec::heisenberg()), &cfg, 2).unwrap();
    let b = simulate_path_omega(&[1.0], &OmegaPoint::identity(1), &cfg, 2).unwrap();
    assert_eq!(a.z_lift, b.z_lift);
    assert_eq!(a.clock, b.clock);
}

#[test]
fn config_validation() {
    assert!(PathConfig::new(0.0, 1.0, 0).validate().is_err());
    assert!(PathConfig::new(0.1, 0.01, 0).validate().is_err());
    let mut c = PathConfig::new(0.1, 1.0, 0);
    c.r_min = 0.5;
    assert!(c.validate().is_err());
    let spec = SpaceSpec::heisenberg();
    let wrong = TotalPoint::origin(&SpaceSpec::su2());
    assert!(matches!(simulate_path(&spec, &wrong, &PathConfig::new(0.1, 1.0, 0), 0), Err(SimError::Start(_))));
}
