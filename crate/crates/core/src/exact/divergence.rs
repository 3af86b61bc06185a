use crate::error::{Error, Result};
use crate::exact::enumerate::for_each_instance;
use crate::model::{BayesianNetwork, Evidence};
use crate::num::{LogSumExp, Real};
use crate::proposal::ProposalDistribution;

/// Exact `D(Q ∥ P(H | e))` by enumeration, `+inf` when `Q` puts mass where
/// the posterior has none.
pub fn exact_kl_to_posterior<T: Real>(
    q: &ProposalDistribution<T>,
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cap: usize,
) -> Result<T> {
    let mut log_pe = LogSumExp::new();
    let mut cross = T::zero();
    let mut infinite = false;
    for_each_instance(net, ev, cap, |full| {
        let lp = net.log_prob_full(full);
        let lq = q.log_prob(full);
        log_pe.push(lp);
        if lq == T::neg_infinity() {
            return;
        }
        if lp == T::neg_infinity() {
            infinite = true;
            return;
        }
        cross = cross + lq.exp() * (lq - lp);
    })?;
    if infinite || log_pe.is_zero() {
        return Ok(T::infinity());
    }
    Ok((cross + log_pe.ln()).max(T::zero()))
}

/// `ln M_Q^r(P(h, e) / Q(h))`, the weighted power mean of the importance
/// ratio under `Q`, computed over every instance.
///
/// `r = 0` is the geometric mean, `r = 1` gives `ln P(e)`.
pub fn exact_power_moment<T: Real>(
    q: &ProposalDistribution<T>,
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    r: T,
    cap: usize,
) -> Result<T> {
    let mut failure = None;
    let mut acc = LogSumExp::new();
    let mut geometric = T::zero();
    let mut zero_ratio = false;
    for_each_instance(net, ev, cap, |full| {
        let lp = net.log_prob_full(full);
        let lq = q.log_prob(full);
        if lq == T::neg_infinity() {
            if lp != T::neg_infinity() && failure.is_none() {
                failure = Some(full.to_vec());
            }
            return;
        }
        if lp == T::neg_infinity() {
            zero_ratio = true;
            return;
        }
        if r == T::zero() {
            geometric = geometric + lq.exp() * (lp - lq);
        } else {
            acc.push((T::one() - r) * lq + r * lp);
        }
    })?;
    if let Some(full) = failure {
        return Err(Error::DominationFailure(format!("instance {full:?} has P > 0 and Q = 0")));
    }
    if r == T::zero() {
        return Ok(if zero_ratio { T::neg_infinity() } else { geometric });
    }
    if r < T::zero() && zero_ratio {
        return Ok(T::neg_infinity());
    }
    Ok(acc.ln() / r)
}

/// Exact quantities of `Q` restricted to the instances with `P(h, e) > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibleSummary<T> {
    /// `ln P(e)`.
    pub log_likelihood: T,
    /// `ln Σ_{h : P(h,e) > 0} Q(h)`.
    pub log_feasible_mass: T,
    /// `D(Q_f ∥ P(H | e))` where `Q_f` is `Q` conditioned on feasibility.
    pub kl_feasible: T,
}

impl<T: Real> FeasibleSummary<T> {
    /// Value the batch divergence estimate converges to:
    /// `D(Q_f ∥ P(H | e)) − ln P(e)`.
    pub fn d_hat_target(&self) -> T {
        self.kl_feasible - self.log_likelihood
    }
}

/// Computes a [`FeasibleSummary`] by enumeration.
pub fn exact_feasible_summary<T: Real>(
    q: &ProposalDistribution<T>,
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cap: usize,
) -> Result<FeasibleSummary<T>> {
    let mut log_pe = LogSumExp::new();
    let mut mass = LogSumExp::new();
    let mut cross = T::zero();
    for_each_instance(net, ev, cap, |full| {
        let lp = net.log_prob_full(full);
        log_pe.push(lp);
        let lq = q.log_prob(full);
        if lp == T::neg_infinity() || lq == T::neg_infinity() {
            return;
        }
        mass.push(lq);
        cross = cross + lq.exp() * (lq - lp);
    })?;
    let log_likelihood = log_pe.ln();
    let log_feasible_mass = mass.ln();
    if mass.is_zero() {
        return Ok(FeasibleSummary { log_likelihood, log_feasible_mass, kl_feasible: T::infinity() });
    }
    // Σ Q_f (ln Q_f − ln P(h|e)) = cross / Z − ln Z + ln P(e)
    let z = log_feasible_mass.exp();
    let kl = cross / z - log_feasible_mass + log_likelihood;
    Ok(FeasibleSummary { log_likelihood, log_feasible_mass, kl_feasible: kl.max(T::zero()) })
}
