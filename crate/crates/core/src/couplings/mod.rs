//! Vertical reflection, base mirror and two-stage couplings.
//!
//! All couplings start the primary path from a fixed point and build the partner
//! from the same randomness: the vertical coupling by reflecting the whole path
//! across the geodesic through the base point where `z` first reaches the halfway
//! level, the mirror coupling by reflecting the base path across the bisector of
//! the two starts.

mod mirror;
mod nonisotropic;
mod two_stage;
mod vertical;

pub use mirror::{mirror_horizontal_coupling, Bisector, HorizontalOutcome, MirrorOutcome};
pub use nonisotropic::{
    invariant_area_difference, nonisotropic_two_stage, nonisotropic_vertical_coupling, NonisotropicStage1,
};
pub use two_stage::{two_stage_coupling, two_stage_probe, TwoStageProbe};
pub use vertical::{
    partner_marginal_check, vertical_coupling_time, vertical_probe, vertical_reflection_coupling, MarginalCheck,
    VerticalProbe,
};

use crate::model_spaces::{BasePoint, SpaceError};
use crate::sde_sim::{Scheme, SimError, Trajectory};
use serde::Serialize;
use thiserror::Error;

/// Base radius below which the hitting point gives no reflection axis.
pub const AXIS_DEGENERACY_RADIUS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid coupling parameters: {0}")]
    Invalid(String),
    #[error("scheme {0:?} does not track the base path needed for the partner")]
    Scheme(Scheme),
}

/// Times and displacements of one coupled run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingOutcome {
    pub coupled: bool,
    /// `σ_a` or `τ`; the horizon when not coupled.
    pub coupling_time: f64,
    /// `σ'` or `T₁` when the first stage succeeded.
    pub stage1_time: Option<f64>,
    /// `2a(σ')` or `A_{T₁}` handed to the second stage.
    pub vertical_displacement_at_stage2: Option<f64>,
    /// Still uncoupled at the horizon.
    pub truncated: bool,
    /// Hyperbolic base paths that drifted beyond the escape distance.
    pub escaped: bool,
}

impl CouplingOutcome {
    pub(crate) fn uncoupled(horizon: f64, escaped: bool) -> Self {
        CouplingOutcome {
            coupled: false,
            coupling_time: horizon,
            stage1_time: None,
            vertical_displacement_at_stage2: None,
            truncated: !escaped,
            escaped,
        }
    }

    pub(crate) fn at(time: f64) -> Self {
        CouplingOutcome {
            coupled: true,
            coupling_time: time,
            stage1_time: None,
            vertical_displacement_at_stage2: None,
            truncated: false,
            escaped: false,
        }
    }
}

/// Primary and partner paths on the same grid.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub primary_path: Trajectory,
    pub partner_path: Trajectory,
    pub outcome: CouplingOutcome,
    /// Reflection axis per factor.
    pub axes: Vec<f64>,
}

/// Primary and partner state at one time; one base point per factor.
#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub t: f64,
    pub primary: Vec<BasePoint>,
    pub z: f64,
    pub partner: Vec<BasePoint>,
    pub z_partner: f64,
}

impl PairState {
    pub fn coincide(&self) -> bool {
        self.primary == self.partner && self.z == self.z_partner
    }
}

pub(crate) fn require_path_scheme(scheme: Scheme) -> Result<(), CouplingError> {
    if scheme == Scheme::BesselClock {
        return Err(CouplingError::Scheme(scheme));
    }
    Ok(())
}
