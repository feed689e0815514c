//! Named experiment configs at desk-check sizes. Each is a TOML document so that
//! `presets --emit` writes exactly what `run` reads back.

use crate::config::{ConfigError, ExperimentConfig};

pub struct Preset {
    pub name: &'static str,
    pub toml: &'static str,
}

impl Preset {
    pub fn config(&self) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_toml(self.toml)
    }
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "hmax-exact-tail",
        toml: r#"name = "hmax-exact-tail"
kind = "vertical_tail"
anchor = "On the Heisenberg group the maximal vertical coupling from (o,0), (o,2a) fails by time t with probability (4/π)·atan(tanh(πa/2t)), which lies between 2a/t − (π²/3)(a/t)³ and 2a/t."
seed = 101
n_paths = 20000

[space]
base = "euclidean"
fiber = "line"

[sim]
dt = 0.001

[params]
a = 1.0
t_grid = [0.5, 1.0, 2.0, 5.0, 10.0]
"#,
    },
    Preset {
        name: "reflection-principle",
        toml: r#"name = "reflection-principle"
kind = "reflection_principle"
anchor = "Before the vertical process first reaches the level a, its law is symmetric about a, so P(σ_a > t) = 1 − 2·P(z_t in the upper set)."
seed = 202
n_paths = 10000

[space]
base = "hyperbolic"
fiber = "line"

[sim]
dt = 0.001

[params]
a = 1.0
t_grid = [1.0, 2.0, 5.0]
"#,
    },
    Preset {
        name: "maximality-witness",
        toml: r#"name = "maximality-witness"
kind = "tv_witness"
anchor = "The vertical reflection coupling is maximal: its failure probability equals the total variation distance between the laws at time t, witnessed by the half-space below the level a."
seed = 303
n_paths = 10000

[space]
base = "euclidean"
fiber = "line"

[sim]
dt = 0.001

[params]
a = 1.0
t_grid = [1.0, 2.0, 5.0]
"#,
    },
    Preset {
        name: "sech-density",
        toml: r#"name = "sech-density"
kind = "density_histogram"
anchor = "The Heisenberg vertical coordinate (Lévy area) at time t has density (1/t)·sech(πz/t)."
seed = 404
n_paths = 20000

[space]
base = "euclidean"
fiber = "line"

[sim]
dt = 0.001

[params]
t_grid = [1.0]
bins = 80
"#,
    },
    Preset {
        name: "hbm-success",
        toml: r#"name = "hbm-success"
kind = "mirror_success"
anchor = "Mirror-coupled hyperbolic Brownian motions started 2r apart ever meet with probability 1 − (4/π)·atan(tanh(r/2))."
seed = 505
n_paths = 5000

[space]
base = "hyperbolic"
fiber = "line"

[sim]
dt = 0.001
horizon = 400.0

[params]
t_grid = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 400.0]

[params.start1]
r = 1.0
theta = 0.0

[params.start2]
r = 1.0
theta = 3.141592653589793
"#,
    },
    Preset {
        name: "sl2u-clt",
        toml: r#"name = "sl2u-clt"
kind = "clt_check"
anchor = "On the universal cover of SL(2) the rescaled vertical coordinate z_t/√t is asymptotically standard normal, and its distribution function dominates Φ on the positive axis."
seed = 606
n_paths = 20000

[space]
base = "hyperbolic"
fiber = "line"

[sim]
dt = 0.01
scheme = "bessel_clock"

[params]
t_grid = [50.0]
"#,
    },
    Preset {
        name: "sl2-expfit",
        toml: r#"name = "sl2-expfit"
kind = "exp_fit"
anchor = "On SL(2) the vertical coupling time has an exponential tail P(σ_a > t) ≤ C·e^{−ct}."
seed = 808
n_paths = 10000

[space]
base = "hyperbolic"
fiber = "circle"

[sim]
dt = 0.001

[params]
a = 0.7853981633974483
t_grid = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]
window = [2.0, 12.0]
law = "exponential"
"#,
    },
    Preset {
        name: "su2-expfit",
        toml: r#"name = "su2-expfit"
kind = "exp_fit"
anchor = "On SU(2) the vertical coupling time has an exponential tail P(σ_a > t) ≤ C·e^{−ct}."
seed = 809
n_paths = 10000

[space]
base = "spherical"
fiber = "circle"

[sim]
dt = 0.001

[params]
a = 0.7853981633974483
t_grid = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]
window = [2.0, 12.0]
law = "exponential"
"#,
    },
    Preset {
        name: "su2-geometry",
        toml: r#"name = "su2-geometry"
kind = "geometry_unit"
anchor = "In SU(2) the points at vertical height a form an equidistant great sphere with normal N_a, and T_b is an orthogonal involution mapping Hopf fibers to fibers over the reflected base point."
seed = 1212
n_paths = 100

[space]
base = "spherical"
fiber = "circle"

[sim]
dt = 0.001
"#,
    },
    Preset {
        name: "nonisotropic-bounds",
        toml: r#"name = "nonisotropic-bounds"
kind = "vertical_tail"
anchor = "On the weighted Heisenberg group with largest weight α_n, the vertical coupling fails by time t with probability at most 2a/(α_n t)."
seed = 910
n_paths = 10000

[space]
base = "euclidean"
fiber = "line"
weights = [1.0, 2.0]

[sim]
dt = 0.001

[params]
a = 1.0
t_grid = [1.0, 2.0, 5.0, 10.0, 20.0]
"#,
    },
    Preset {
        name: "two-stage-heisenberg",
        toml: r#"name = "two-stage-heisenberg"
kind = "two_stage_tail"
anchor = "The two-stage coupling on the Heisenberg group from starts with horizontal separation h and vertical separation v fails by time t with probability of order min(h/√t, |v|/t)."
seed = 1010
n_paths = 5000

[space]
base = "euclidean"
fiber = "line"

[sim]
dt = 0.01
horizon = 50.0

[params]
t_grid = [1.0, 2.0, 5.0, 6.0, 10.0, 20.0, 30.0, 40.0, 50.0]

[params.start1]
r = 0.0

[params.start2]
r = 1.0
theta = 0.0
z = 2.0
"#,
    },
    Preset {
        name: "gradient-vertical",
        toml: r#"name = "gradient-vertical"
kind = "gradient_bound"
anchor = "For bounded f the vertical derivative of the heat semigroup on the Heisenberg group satisfies |Z P_t f| ≤ ‖f‖∞/t."
seed = 1313
n_paths = 10000

[space]
base = "euclidean"
fiber = "line"

[sim]
dt = 0.001

[params]
a = 0.25
t_grid = [1.0, 2.0, 5.0]
"#,
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_validates_and_round_trips() {
        for p in PRESETS {
            let c = p.config().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(c.name, p.name);
            assert!(c.anchor.is_some());
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
        assert!(find("sech-density").is_some() && find("nope").is_none());
    }
}
