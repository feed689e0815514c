//! Coupled difference quotients for the vertical gradient of the heat semigroup.

use super::Estimate;
use crate::couplings::{vertical_probe, CouplingError};
use crate::model_spaces::{BasePoint, SpaceSpec};
use crate::sde_sim::{run_batch, PathConfig};
use serde::{Deserialize, Serialize};

/// Bounded test functions of a point `(x, z)` of the total space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `1{z < c}`.
    Indicator { c: f64 },
    /// `sign(z − c)`; its oscillation is twice its sup norm.
    Sign { c: f64 },
    /// `cos z`.
    Cosine,
    /// Logistic step `1 / (1 + e^{z − c})`.
    SmoothStep { c: f64 },
    /// `exp(−Σ r_i²)` on the base.
    RadialBump,
    /// `exp(−(z − c)²)`.
    ZBump { c: f64 },
}

impl TestFunction {
    pub fn eval(&self, base: &[BasePoint], z: f64) -> f64 {
        match *self {
            TestFunction::Indicator { c } => (z < c) as u8 as f64,
            TestFunction::Sign { c } => {
                if z > c {
                    1.0
                } else if z < c {
                    -1.0
                } else {
                    0.0
                }
            }
            TestFunction::Cosine => z.cos(),
            TestFunction::SmoothStep { c } => 1.0 / (1.0 + (z - c).exp()),
            TestFunction::RadialBump => (-base.iter().map(|b| b.r() * b.r()).sum::<f64>()).exp(),
            TestFunction::ZBump { c } => (-(z - c) * (z - c)).exp(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    pub fn name(&self) -> String {
        match *self {
            TestFunction::Indicator { c } => format!("indicator(z<{c})"),
            TestFunction::Sign { c } => format!("sign(z-{c})"),
            TestFunction::Cosine => "cos(z)".into(),
            TestFunction::SmoothStep { c } => format!("logistic(z-{c})"),
            TestFunction::RadialBump => "exp(-r^2)".into(),
            TestFunction::ZBump { c } => format!("exp(-(z-{c})^2)"),
        }
    }
}

/// `|E f(B̃_t) − E f(B_t)| / (2a)` for the vertical coupling of `(o, 0)` and
/// `(o, 2a)`.
///
/// Both expectations use the same paths, so each summand vanishes once the pair
/// has coupled. The standard error is that of the per-path difference.
pub fn vertical_gradient_estimate(
    spec: &SpaceSpec,
    f: &TestFunction,
    t: f64,
    a: f64,
    cfg: &PathConfig,
    n_paths: u64,
) -> Result<Estimate, CouplingError> {
    Ok(vertical_gradient_estimates(spec, std::slice::from_ref(f), t, a, cfg, n_paths)?[0])
}

/// [`vertical_gradient_estimate`] for several test functions on the same coupled paths.
pub fn vertical_gradient_estimates(
    spec: &SpaceSpec,
    fs: &[TestFunction],
    t: f64,
    a: f64,
    cfg: &PathConfig,
    n_paths: u64,
) -> Result<Vec<Estimate>, CouplingError> {
    if !(t > 0.0) || n_paths < 2 {
        return Err(CouplingError::Invalid(format!("need t > 0 and at least two paths, got t={t}, n={n_paths}")));
    }
    let cfg = cfg.clone().with_horizon(t);
    vertical_probe(spec, a, &cfg, 0, &[t])?;
    let diffs: Vec<Vec<f64>> = run_batch(n_paths, |i| {
        let probe = vertical_probe(spec, a, &cfg, i, &[t]).expect("parameters validated above");
        let s = &probe.states[0];
        fs.iter().map(|f| (f.eval(&s.partner, s.z_partner) - f.eval(&s.primary, s.z)) / (2.0 * a)).collect()
    });
    Ok((0..fs.len())
        .map(|k| {
            let est = Estimate::mean_of(diffs.iter().map(|d| d[k]));
            Estimate { value: est.value.abs(), se: est.se }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::heisenberg_tail_exact;

    fn cfg() -> PathConfig {
        PathConfig::new(1e-3, 1.0, 2024)
    }

    #[test]
    fn constant_difference_is_zero() {
        // A function of the base alone has equal laws under the reflection,
        // and identical values once the pair has coupled.
        let spec = SpaceSpec::heisenberg();
        let est = vertical_gradient_estimate(&spec, &TestFunction::RadialBump, 1.0, 0.25, &cfg(), 4000).unwrap();
        assert!(est.value <= 4.0 * est.se + 1e-12, "{est:?}");
        let zero = TestFunction::ZBump { c: f64::INFINITY };
        let est = vertical_gradient_estimate(&spec, &zero, 1.0, 0.25, &cfg(), 100).unwrap();
        assert_eq!((est.value, est.se), (0.0, 0.0));
    }

    #[test]
    fn indicator_matches_tail() {
        let spec = SpaceSpec::heisenberg();
        let a = 0.25;
        for t in [1.0, 2.0] {
            let est =
                vertical_gradient_estimate(&spec, &TestFunction::Indicator { c: a }, t, a, &cfg(), 20_000).unwrap();
            let exact = heisenberg_tail_exact(a, t) / (2.0 * a);
            assert!((est.value - exact).abs() <= 3.0 * est.se + 0.01, "t={t}: {est:?} vs {exact}");
            assert!(est.value <= 1.0 / t + 5.0 * est.se);
        }
    }

    #[test]
    fn cosine_matches_characteristic_function() {
        // E cos z_t = sech(t/2), and E sin z_t = 0 by symmetry.
        let spec = SpaceSpec::heisenberg();
        let (a, t) = (0.25, 2.0);
        let est = vertical_gradient_estimate(&spec, &TestFunction::Cosine, t, a, &cfg(), 20_000).unwrap();
        let exact = (1.0 - (2.0 * a).cos()) / (2.0 * a * (0.5 * t).cosh());
        assert!((est.value - exact).abs() <= 3.0 * est.se + 2e-3, "{est:?} vs {exact}");
        assert!(est.value <= 1.0 / t + 5.0 * est.se);
    }

    #[test]
    fn sign_reaches_twice_the_sup_norm_bound() {
        // sign has oscillation 2‖f‖, so the quotient approaches 2/t for small a/t.
        let spec = SpaceSpec::heisenberg();
        let (a, t) = (0.25, 5.0);
        let est = vertical_gradient_estimate(&spec, &TestFunction::Sign { c: a }, t, a, &cfg(), 20_000).unwrap();
        let exact = 2.0 * heisenberg_tail_exact(a, t) / (2.0 * a);
        assert!((est.value - exact).abs() <= 3.0 * est.se + 0.01, "{est:?} vs {exact}");
        assert!(est.value > 1.0 / t + 5.0 * est.se);
    }

    #[test]
    fn joint_estimates_match_single_ones() {
        let spec = SpaceSpec::heisenberg();
        let fs = [TestFunction::Cosine, TestFunction::SmoothStep { c: 0.25 }];
        let joint = vertical_gradient_estimates(&spec, &fs, 1.0, 0.25, &cfg(), 500).unwrap();
        for (f, e) in fs.iter().zip(&joint) {
            assert_eq!(*e, vertical_gradient_estimate(&spec, f, 1.0, 0.25, &cfg(), 500).unwrap());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let spec = SpaceSpec::heisenberg();
        assert!(vertical_gradient_estimate(&spec, &TestFunction::Cosine, 0.0, 0.25, &cfg(), 100).is_err());
        assert!(vertical_gradient_estimate(&spec, &TestFunction::Cosine, 1.0, -1.0, &cfg(), 100).is_err());
    }

    #[test]
    fn test_function_values() {
        let o = [BasePoint::origin(crate::model_spaces::Base::Euclidean)];
        assert_eq!(TestFunction::Indicator { c: 1.0 }.eval(&o, 0.5), 1.0);
        assert_eq!(TestFunction::Sign { c: 0.0 }.eval(&o, -2.0), -1.0);
        assert_eq!(TestFunction::SmoothStep { c: 0.0 }.eval(&o, 0.0), 0.5);
        assert_eq!(TestFunction::RadialBump.eval(&o, 3.0), 1.0);
        assert!(TestFunction::Cosine.name().contains("cos"));
    }
}
