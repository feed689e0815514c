//! Invariants of the public API that cut across modules.

use coupling_lab_core::analytics::{
    empirical_tail, heisenberg_tail_bounds, heisenberg_tail_exact, hyperbolic_success_prob, levy_area_cdf,
    levy_area_density, ConvolvedDensity, Observation,
};
use coupling_lab_core::couplings::{mirror_horizontal_coupling, vertical_coupling_time, vertical_reflection_coupling};
use coupling_lab_core::model_spaces::{base_distance, reflect_base, BasePoint, SpaceSpec, TotalPoint};
use coupling_lab_core::sde_sim::{run_batch, sample_path, PathConfig};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn spaces() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec::heisenberg(),
        SpaceSpec::sl2_universal(),
        SpaceSpec::sl2(),
        SpaceSpec::su2(),
        SpaceSpec::nonisotropic(vec![1.0, 2.0]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflection_is_an_isometric_involution(
        k in 0usize..3,
        axis in 0.0..TAU,
        (r1, th1, r2, th2) in (0.0f64..3.0, 0.0..TAU, 0.0f64..3.0, 0.0..TAU),
    ) {
        let spec = &spaces()[k];
        let p = BasePoint::from_polar(spec.base(), r1, th1).unwrap();
        let q = BasePoint::from_polar(spec.base(), r2, th2).unwrap();
        let (rp, rq) = (reflect_base(spec, axis, &p), reflect_base(spec, axis, &q));
        prop_assert!((base_distance(spec, &rp, &rq) - base_distance(spec, &p, &q)).abs() < 1e-9);
        prop_assert!((rp.r() - p.r()).abs() < 1e-12);
        let back = reflect_base(spec, axis, &rp).embedded();
        for (b, x) in back.iter().zip(p.embedded()) {
            prop_assert!((b - x).abs() < 1e-9);
        }
    }

    #[test]
    fn vertical_partner_mirrors_primary_until_coupling(
        k in 0usize..5,
        a in 0.05f64..1.0,
        seed in any::<u64>(),
        index in 0u64..1000,
    ) {
        let spec = &spaces()[k];
        let cfg = PathConfig::new(1e-2, 2.0, seed);
        let pair = vertical_reflection_coupling(spec, a, &cfg, index).unwrap();
        let (p, q) = (&pair.primary_path, &pair.partner_path);
        let nf = p.n_factors;
        let crossing = pair.outcome.coupled.then_some(pair.outcome.coupling_time);
        for step in 0..p.len() {
            for f in 0..nf {
                prop_assert!((p.factor_at(step, f).r() - q.factor_at(step, f).r()).abs() < 1e-9);
            }
            let before = crossing.map_or(true, |t| p.times[step] < t - cfg.dt);
            if before {
                prop_assert!((p.z_lift[step] + q.z_lift[step] - 2.0 * a).abs() < 1e-9);
            }
            let after = crossing.is_some_and(|t| p.times[step] > t + cfg.dt);
            if after {
                prop_assert_eq!(p.factor_at(step, 0), q.factor_at(step, 0));
                prop_assert!((p.z_lift[step] - q.z_lift[step]).abs() < 1e-12);
            }
        }
        // The streamed coupling time agrees with the recorded run.
        let streamed = vertical_coupling_time(spec, a, &cfg, index).unwrap();
        prop_assert_eq!(streamed.coupled, pair.outcome.coupled);
        prop_assert!((streamed.coupling_time - pair.outcome.coupling_time).abs() < 1e-12);
    }

    #[test]
    fn mirror_coupled_paths_meet_at_the_reported_time(
        k in 0usize..2,
        r in 0.1f64..1.0,
        seed in any::<u64>(),
    ) {
        let spec = &spaces()[k];
        let p = BasePoint::from_polar(spec.base(), r, 0.0).unwrap();
        let q = BasePoint::from_polar(spec.base(), r, PI).unwrap();
        let cfg = PathConfig::new(1e-2, 5.0, seed);
        let m = mirror_horizontal_coupling(spec, &p, &q, &cfg, 0).unwrap();
        let h = m.horizontal;
        prop_assert!(h.meeting_time <= cfg.horizon + 1e-12);
        prop_assert_eq!(h.coupled, m.displacement.is_some());
        if h.coupled {
            prop_assert!(base_distance(spec, &h.primary.base, &h.partner.base) < 1e-6);
        } else {
            prop_assert!(h.truncated || h.escaped);
        }
    }

    #[test]
    fn closed_form_tail_is_bracketed_and_monotone(a in 0.01f64..3.0, t in 0.05f64..50.0) {
        let s = heisenberg_tail_exact(a, t);
        let (lo, hi) = heisenberg_tail_bounds(a, t);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(s <= hi + 1e-12 && s >= lo - 1e-12);
        prop_assert!(heisenberg_tail_exact(a, 1.1 * t) <= s + 1e-15);
        prop_assert!(heisenberg_tail_exact(1.1 * a, t) >= s - 1e-15);
    }

    #[test]
    fn levy_area_cdf_differentiates_to_density(t in 0.1f64..20.0, u in -4.0f64..4.0) {
        let z = u * t;
        let h = 1e-5 * t;
        let d = (levy_area_cdf(t, z + h) - levy_area_cdf(t, z - h)) / (2.0 * h);
        prop_assert!((d - levy_area_density(t, z)).abs() < 1e-6 / t);
    }

    #[test]
    fn success_probability_decreases_with_separation(r in 0.0f64..10.0) {
        let p = hyperbolic_success_prob(r);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(hyperbolic_success_prob(r + 0.1) < p);
    }

    #[test]
    fn empirical_tail_is_non_increasing(times in prop::collection::vec((0.0f64..10.0, any::<bool>()), 1..200)) {
        let obs: Vec<Observation> = times.iter().map(|&(time, event)| Observation { time, event }).collect();
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
        let c = empirical_tail(&obs, &grid);
        prop_assert!(c.survival.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(c.survival.iter().all(|s| (0.0..=1.0).contains(s)));
    }
}

#[test]
fn weighted_density_is_normalized_and_bounded() {
    let w = [1.0, 2.0];
    for t in [0.5, 1.0, 4.0] {
        let d = ConvolvedDensity::new(&w, t);
        let s = d.support();
        let n = 8000;
        let h = 2.0 * s / n as f64;
        let mass: f64 = (0..n).map(|k| d.density(-s + (k as f64 + 0.5) * h) * h).sum();
        assert!((mass - 1.0).abs() < 1e-4, "t={t}: mass {mass}");
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-6);
        assert!(d.density(0.0) <= 1.0 / (2.0 * t) + 1e-9);
    }
}

#[test]
fn batches_are_reproducible_across_thread_counts() {
    let spec = SpaceSpec::sl2_universal();
    let cfg = PathConfig::new(1e-2, 3.0, 42);
    let o = TotalPoint::origin(&spec);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_batch(200, |i| sample_path(&spec, &o, Some(0.5), &[1.0, 3.0], &cfg, i).unwrap()))
    };
    assert_eq!(run(1), run(3));
}
