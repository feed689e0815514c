//! Closed-form laws for the vertical coupling times and the Lévy area.

use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Density `(1/t)·sech(πz/t)` of the Heisenberg vertical coordinate at time `t`.
pub fn levy_area_density(t: f64, z: f64) -> f64 {
    let x = (PI * z / t).abs();
    // sech x = 2e^{-x}/(1 + e^{-2x}) stays finite for large |x|.
    let e = (-x).exp();
    2.0 * e / (1.0 + e * e) / t
}

/// Distribution function `(2/π)·atan(e^{πz/t})` of the same law.
pub fn levy_area_cdf(t: f64, z: f64) -> f64 {
    let x = PI * z / t;
    if x > 0.0 {
        1.0 - 2.0 / PI * (-x).exp().atan()
    } else {
        2.0 / PI * x.exp().atan()
    }
}

/// `P(σ_a > t) = (4/π)·atan(tanh(πa/2t))` on the Heisenberg group.
pub fn heisenberg_tail_exact(a: f64, t: f64) -> f64 {
    if !(t > 0.0) || a < 0.0 {
        return f64::NAN;
    }
    4.0 / PI * (0.5 * PI * a / t).tanh().atan()
}

/// `(2a/t − (π²/3)(a/t)³, 2a/t)`; the lower bound is not clamped.
pub fn heisenberg_tail_bounds(a: f64, t: f64) -> (f64, f64) {
    let x = a / t;
    (2.0 * x - PI * PI / 3.0 * x * x * x, 2.0 * x)
}

/// Probability that the hyperbolic mirror coupling from half-separation `r`
/// ever succeeds: `1 − (4/π)·atan(tanh(r/2))`.
pub fn hyperbolic_success_prob(r: f64) -> f64 {
    1.0 - horizontal_tv_limit_sl2(r)
}

/// Long-time total variation floor `(4/π)·atan(tanh(r/2))` between
/// `SL(2)~` Brownian motions whose base points are `2r` apart.
pub fn horizontal_tv_limit_sl2(r: f64) -> f64 {
    4.0 / PI * (0.5 * r).tanh().atan()
}

/// `2a/(α_n t)` with `α_n` the largest weight.
pub fn nonisotropic_tail_bound(weights: &[f64], a: f64, t: f64) -> f64 {
    let alpha_n = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    2.0 * a / (alpha_n * t)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule, used as an independent quadrature oracle.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn density_examples() {
        assert_eq!(levy_area_density(1.0, 0.0), 1.0);
        for &z in &[0.3, 1.7, 12.0] {
            assert_eq!(levy_area_density(2.0, z), levy_area_density(2.0, -z));
        }
        let mass = simpson(|z| levy_area_density(1.0, z), -50.0, 50.0, 200_000);
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    }

    #[test]
    fn density_scaling_identity() {
        for &t in &[0.1, 0.7, 1.0, 3.0, 25.0] {
            for &z in &[-4.0, -0.2, 0.0, 0.9, 6.5] {
                let lhs = levy_area_density(t, z);
                let rhs = levy_area_density(1.0, z / t) / t;
                assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1.0));
            }
        }
    }

    #[test]
    fn cdf_matches_integrated_density() {
        for &z in &[-3.0, -0.5, 0.0, 0.4, 2.2] {
            let q = simpson(|y| levy_area_density(1.5, y), -60.0, z, 100_000);
            assert!((levy_area_cdf(1.5, z) - q).abs() < 1e-10);
        }
        assert_eq!(levy_area_cdf(1.0, 0.0), 0.5);
    }

    #[test]
    fn exact_tail_examples() {
        assert!((heisenberg_tail_exact(1e6, 1.0) - 1.0).abs() < 1e-12);
        // (4/π)·atan(tanh(π/2)) to 12 digits, from an independent series evaluation.
        let tanh = (std::f64::consts::FRAC_PI_2).tanh();
        // atan x = 2·atan(x/(1+√(1+x²))) brings the argument into the fast range.
        let y = tanh / (1.0 + (1.0 + tanh * tanh).sqrt());
        let mut atan = 0.0;
        let mut term = y;
        for k in 0..200 {
            atan += term / (2 * k + 1) as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
            term *= y * y;
        }
        let oracle = 4.0 / PI * 2.0 * atan;
        assert!((heisenberg_tail_exact(1.0, 1.0) - oracle).abs() < 1e-14);
        assert!((heisenberg_tail_exact(1.0, 1.0) - 0.945_012_541_997_85).abs() < 1e-13);
    }

    #[test]
    fn exact_tail_is_monotone() {
        let mut prev = 1.0;
        for k in 1..200 {
            let v = heisenberg_tail_exact(1.0, 0.1 * k as f64);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        assert!(heisenberg_tail_exact(0.5, 2.0) < heisenberg_tail_exact(0.6, 2.0));
    }

    #[test]
    fn exact_tail_equals_reflection_integral() {
        for &(a, t) in &[(1.0, 1.0), (1.0, 5.0), (0.3, 2.0)] {
            let upper = simpson(|z| levy_area_density(t, z), a, a + 80.0 * t, 400_000);
            let rp = 1.0 - 2.0 * upper;
            assert!((heisenberg_tail_exact(a, t) - rp).abs() < 1e-8);
        }
    }

    #[test]
    fn tail_bounds() {
        let (lo, hi) = heisenberg_tail_bounds(0.01, 1.0);
        assert!((hi - 0.02).abs() < 1e-15 && (lo - (0.02 - PI * PI / 3.0 * 1e-6)).abs() < 1e-15);
        assert!((lo - 0.019_996_710_131_866).abs() < 1e-15);
        assert_eq!(heisenberg_tail_bounds(0.0, 1.0), (0.0, 0.0));
        for k in 1..=50 {
            let x = 0.01 * k as f64;
            let (lo, hi) = heisenberg_tail_bounds(x, 1.0);
            let v = heisenberg_tail_exact(x, 1.0);
            assert!(lo < v && v < hi, "{x}");
        }
        let (lo, hi) = heisenberg_tail_bounds(0.1, 1.0);
        let v = heisenberg_tail_exact(0.1, 1.0);
        assert!(lo < v && v < hi);
    }

    #[test]
    fn hyperbolic_success() {
        assert_eq!(hyperbolic_success_prob(0.0), 1.0);
        assert!(hyperbolic_success_prob(40.0) < 1e-12);
        let oracle = 1.0 - 4.0 / PI * 0.5f64.tanh().atan();
        assert!((hyperbolic_success_prob(1.0) - oracle).abs() < 1e-15);
        assert!((hyperbolic_success_prob(1.0) - 0.448_834_028_657_17).abs() < 1e-13);
        for &r in &[0.0, 0.5, 1.0, 2.0, 7.0] {
            assert_eq!(hyperbolic_success_prob(r) + horizontal_tv_limit_sl2(r), 1.0);
        }
        assert_eq!(horizontal_tv_limit_sl2(0.0), 0.0);
        assert!((horizontal_tv_limit_sl2(60.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonisotropic_bound_examples() {
        assert_eq!(nonisotropic_tail_bound(&[1.0, 2.0], 1.0, 4.0), 0.25);
        assert_eq!(nonisotropic_tail_bound(&[1.0, 2.0], 0.0, 4.0), 0.0);
        assert!(nonisotropic_tail_bound(&[1.0], 1.0, 3.0) < nonisotropic_tail_bound(&[1.0], 1.0, 2.0));
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        let d = normal_cdf(1.96) - 0.975_002_104_851_78;
        assert!(d.abs() < 1e-10, "{d:e}");
        for &x in &[0.1, 0.8, 2.5, 4.0] {
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
        }
        // Series oracle: Φ(x) = ½ + φ(x)·Σ x^{2k+1}/(1·3·…·(2k+1)).
        for &x in &[0.3, 1.0, 2.0] {
            let mut term = x;
            let mut sum = x;
            for k in 1..100 {
                term *= x * x / (2 * k + 1) as f64;
                sum += term;
            }
            let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            assert!((normal_cdf(x) - (0.5 + phi * sum)).abs() < 1e-10);
        }
    }
}
