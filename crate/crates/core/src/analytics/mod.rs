//! Closed-form laws, empirical estimators and the statistics that compare them.

mod closed_form;
mod convolution;
mod estimators;
mod gradient;
mod stats;

pub use closed_form::{
    heisenberg_tail_bounds, heisenberg_tail_exact, horizontal_tv_limit_sl2, hyperbolic_success_prob, levy_area_cdf,
    levy_area_density, nonisotropic_tail_bound, normal_cdf,
};
pub use convolution::{nonisotropic_density, ConvolvedDensity};
pub use estimators::{
    clt_check_sl2, empirical_tail, empirical_tv_witness, exp_rate_fit, in_lower_set, in_upper_set, paired_tv_witness,
    power_law_fit, reflection_principle_check, CltCheck, DensityEstimate, FitResult, Observation, TailCurve,
};
pub use gradient::{vertical_gradient_estimate, vertical_gradient_estimates, TestFunction};
pub use stats::{kolmogorov_q, ks_one_sample, ks_two_sample, Estimate, KsResult, StatsError, MIN_KS_SAMPLES};
