//! Estimators, the adaptive batch loop and baseline samplers.

mod config;
mod run;
mod stats;

pub use config::{RunOptions, SamplerConfig};
pub use run::{
    count_infeasible, estimate_static, likelihood_weighting, run_likelihood_weighting, run_varis, run_varis_from,
    sis_star, varis_proposal, BatchStats, RunReport, StaticEstimate,
};
pub use stats::{
    acceptance_probability, batch_divergence, batch_weight, coefficient_of_variation, combine_batches,
    correlation_threshold, correlation_trigger, kl_estimate, mixing_rate, pearson, power_mean, EstimatorState,
    WEIGHT_EPSILON,
};
