//! Importance sampling for discrete Bayesian networks with many
//! deterministic tables.
//!
//! The sampler deletes edges until the network is tractable, fits the
//! simplified network to the original prior, compiles an importance function
//! from its bucket-elimination tables, and then samples in batches while
//! adapting the importance function.

pub mod cli;
pub mod engine;
pub mod error;
pub mod exact;
pub mod model;
pub mod num;
pub mod proposal;
pub mod simplify;

pub use error::{Error, Result};
pub use num::Real;

/// Network with `f64` tables.
pub type Network = model::BayesianNetwork<f64>;
/// Network with `f32` tables.
pub type Network32 = model::BayesianNetwork<f32>;
pub type Proposal = proposal::ProposalDistribution<f64>;
pub type Proposal32 = proposal::ProposalDistribution<f32>;
pub type Simplified = simplify::SimplifiedNetwork<f64>;
pub type Report = engine::RunReport<f64>;
pub type Report32 = engine::RunReport<f32>;
