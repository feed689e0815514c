//! Sub-Riemannian Brownian motions on the Heisenberg groups, SL(2), its universal
//! cover and SU(2), their vertical reflection couplings, and the closed-form laws
//! those couplings satisfy.

pub mod analytics;
pub mod couplings;
pub mod model_spaces;
pub mod sde_sim;
