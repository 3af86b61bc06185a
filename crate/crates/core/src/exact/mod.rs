//! Exact inference: enumeration oracle, elimination orders and bucket
//! elimination.

mod bucket;
mod divergence;
mod enumerate;
mod factor;
mod order;

pub use bucket::{
    bucket_eliminate, variable_elimination, Bucket, BucketScheme, Limits, DEFAULT_ENUMERATION_CAP, DEFAULT_TABLE_CAP,
};
pub use divergence::{exact_feasible_summary, exact_kl_to_posterior, exact_power_moment, FeasibleSummary};
pub use enumerate::{enumerate_likelihood, for_each_instance};
pub use factor::Factor;
pub(crate) use order::{clamped_scopes, InteractionGraph};
pub use order::{min_fill_order, min_fill_order_given, min_fill_width, min_fill_width_given, EliminationOrder};

use crate::error::{Error, Result};
use crate::model::{BayesianNetwork, Evidence};
use crate::num::Real;

/// Method used by [`exact_likelihood`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMethod {
    Enumeration,
    BucketElimination,
}

impl ExactMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ExactMethod::Enumeration => "enumeration",
            ExactMethod::BucketElimination => "bucket_elimination",
        }
    }
}

/// `ln P(e)` by enumeration when the hidden space fits the enumeration cap,
/// otherwise by bucket elimination on the min-fill order.
pub fn exact_likelihood<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence, limits: Limits) -> Result<(T, ExactMethod)> {
    match enumerate_likelihood(net, ev, limits.enumeration) {
        Ok(v) => Ok((v, ExactMethod::Enumeration)),
        Err(Error::CapExceeded { .. }) => {
            let (v, _) = bucket_eliminate(net, ev, &min_fill_order(net), limits.table)?;
            Ok((v, ExactMethod::BucketElimination))
        }
        Err(e) => Err(e),
    }
}
