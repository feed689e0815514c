//! Experiment configuration files (TOML) and their validation.

use coupling_lab_core::analytics::{TestFunction, MIN_KS_SAMPLES};
use coupling_lab_core::model_spaces::{Base, BasePoint, Fiber, OmegaPoint, SpaceSpec, TotalPoint};
use coupling_lab_core::sde_sim::{PathConfig, Scheme};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    VerticalTail,
    TwoStageTail,
    DensityHistogram,
    TvWitness,
    ReflectionPrinciple,
    CltCheck,
    ExpFit,
    GradientBound,
    GeometryUnit,
    MirrorSuccess,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseName {
    Euclidean,
    Hyperbolic,
    Spherical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberName {
    Line,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    PolarEm,
    EmbeddedGeodesic,
    BesselClock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitLaw {
    Exponential,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub base: BaseName,
    pub fiber: FiberName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    /// Defaults to the last grid time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
}

fn default_scheme() -> SchemeName {
    SchemeName::EmbeddedGeodesic
}

fn default_true() -> bool {
    true
}

/// A start point: polar `(r, θ)` on a single-factor base, or one `[x, y]` per
/// factor of a weighted Heisenberg group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub z: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start1: Option<StartConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start2: Option<StartConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<FitLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<TestFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    /// The statement the experiment tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    pub seed: u64,
    pub n_paths: u64,
    /// Defaults to `results/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub space: SpaceConfig,
    pub sim: SimConfig,
    #[serde(default)]
    pub params: Params,
}

/// A configuration that passed validation, with the library objects it describes.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: SpaceSpec,
    pub path: PathConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs serialize")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| Path::new("results").join(&self.name))
    }

    /// Checks every field against the kind and the space before anything runs.
    pub fn validate(self) -> Result<Experiment, ConfigError> {
        let c = &self;
        if c.name.is_empty() || !c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_') {
            return Err(invalid("name", "must be non-empty and use only letters, digits, '-' and '_'"));
        }
        if c.n_paths < 100 {
            return Err(invalid("n_paths", format!("must be at least 100, got {}", c.n_paths)));
        }
        let spec = self.space_spec()?;
        let p = &c.params;
        let grid = &p.t_grid;
        let needs_grid = !matches!(c.kind, Kind::GeometryUnit);
        if needs_grid && grid.is_empty() {
            return Err(invalid("params.t_grid", "must be non-empty"));
        }
        if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("params.t_grid", "times must be finite and positive"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("params.t_grid", "must be strictly increasing"));
        }
        let horizon = c.sim.horizon.or(grid.last().copied()).unwrap_or(1.0);
        if let Some(last) = grid.last() {
            if horizon < *last {
                return Err(invalid("sim.horizon", format!("{horizon} is before the last grid time {last}")));
            }
        }
        let scheme = match c.sim.scheme {
            SchemeName::PolarEm => Scheme::PolarEM,
            SchemeName::EmbeddedGeodesic => Scheme::EmbeddedGeodesic,
            SchemeName::BesselClock => Scheme::BesselClock,
        };
        let mut path = PathConfig::new(c.sim.dt, horizon, c.seed).with_scheme(scheme);
        path.bridge_correction = c.sim.bridge_correction;
        path.validate().map_err(|e| invalid("sim", e.to_string()))?;

        let needs_a = matches!(
            c.kind,
            Kind::VerticalTail | Kind::TvWitness | Kind::ReflectionPrinciple | Kind::ExpFit | Kind::GradientBound
        );
        if needs_a {
            match p.a {
                Some(a) if a.is_finite() && a > 0.0 => {
                    if spec.fiber() == Fiber::Circle && 2.0 * a > 2.0 * std::f64::consts::PI {
                        return Err(invalid("params.a", "2a must lie in (0, 2π] on a circle fiber"));
                    }
                }
                Some(a) => return Err(invalid("params.a", format!("must be positive, got {a}"))),
                None => return Err(invalid("params.a", format!("required for kind {:?}", c.kind))),
            }
        }
        let needs_path_scheme = matches!(
            c.kind,
            Kind::TwoStageTail
                | Kind::TvWitness
                | Kind::ReflectionPrinciple
                | Kind::GradientBound
                | Kind::MirrorSuccess
        ) || (c.kind == Kind::DensityHistogram && spec.n_factors() > 1);
        if needs_path_scheme && scheme == Scheme::BesselClock {
            return Err(invalid(
                "sim.scheme",
                format!("bessel_clock does not track the base path needed by {:?}", c.kind),
            ));
        }
        if matches!(c.kind, Kind::CltCheck | Kind::DensityHistogram) && c.n_paths < MIN_KS_SAMPLES as u64 {
            return Err(invalid("n_paths", format!("KS checks need at least {MIN_KS_SAMPLES} paths")));
        }
        match c.kind {
            Kind::TwoStageTail | Kind::MirrorSuccess => {
                let s1 = start_for(&spec, p.start1.as_ref(), "params.start1")?;
                let s2 = start_for(&spec, p.start2.as_ref(), "params.start2")?;
                if c.kind == Kind::MirrorSuccess && (spec.n_factors() != 1 || s1 == s2) {
                    return Err(invalid("params.start2", "mirror coupling needs two distinct single-factor starts"));
                }
            }
            Kind::ExpFit => {
                let w = p.window.ok_or_else(|| invalid("params.window", "required for kind ExpFit"))?;
                if !(w[0] < w[1]) {
                    return Err(invalid("params.window", "must satisfy start < end"));
                }
            }
            Kind::DensityHistogram => {
                if let Some(b) = p.bins {
                    if !(2..=10_000).contains(&b) {
                        return Err(invalid("params.bins", "must lie in 2..=10000"));
                    }
                }
            }
            Kind::GeometryUnit => {
                if spec.base() != Base::Spherical {
                    return Err(invalid("space", "geometry checks are defined for SU(2)"));
                }
            }
            Kind::CltCheck => {
                if spec.base() != Base::Hyperbolic || spec.fiber() != Fiber::Line {
                    return Err(invalid("space", "the CLT check is defined for the hyperbolic base with a line fiber"));
                }
            }
            _ => {}
        }
        if !p.functions.is_empty() && c.kind != Kind::GradientBound {
            return Err(invalid("params.functions", "only used by kind GradientBound"));
        }
        Ok(Experiment { spec, path, config: self })
    }

    fn space_spec(&self) -> Result<SpaceSpec, ConfigError> {
        let base = match self.space.base {
            BaseName::Euclidean => Base::Euclidean,
            BaseName::Hyperbolic => Base::Hyperbolic,
            BaseName::Spherical => Base::Spherical,
        };
        let fiber = match self.space.fiber {
            FiberName::Line => Fiber::Line,
            FiberName::Circle => Fiber::Circle,
        };
        SpaceSpec::new(base, fiber, self.space.weights.clone()).map_err(|e| invalid("space", e.to_string()))
    }
}

/// Start point of a single-factor space, or the product start of a weighted one.
#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    Single(TotalPoint),
    Product(OmegaPoint),
}

pub fn start_for(spec: &SpaceSpec, s: Option<&StartConfig>, field: &str) -> Result<Start, ConfigError> {
    let s = s.ok_or_else(|| invalid(field, "required for this kind"))?;
    if !s.z.is_finite() {
        return Err(invalid(field, "z must be finite"));
    }
    if spec.weights().is_some() {
        let xy = s.xy.clone().ok_or_else(|| invalid(field, "weighted spaces take xy = [[x, y], ...]"))?;
        if xy.len() != spec.n_factors() || s.r.is_some() || s.theta.is_some() {
            return Err(invalid(field, format!("need exactly {} xy pairs and no r/theta", spec.n_factors())));
        }
        if xy.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid(field, "xy must be finite"));
        }
        return Ok(Start::Product(OmegaPoint { xy, z: s.z }));
    }
    if s.xy.is_some() {
        return Err(invalid(field, "xy is only for weighted spaces; use r and theta"));
    }
    let base = BasePoint::from_polar(spec.base(), s.r.unwrap_or(0.0), s.theta.unwrap_or(0.0))
        .map_err(|e| invalid(field, e.to_string()))?;
    Ok(Start::Single(TotalPoint::new(spec, base, s.z)))
}
