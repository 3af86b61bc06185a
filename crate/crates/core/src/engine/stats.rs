use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::SamplerConfig;
use crate::error::{Error, Result};
use crate::num::{LogSumExp, Real};
use crate::proposal::{Direction, SampleRecord};

/// Guard added to the coefficient of variation in [`batch_weight`].
pub const WEIGHT_EPSILON: f64 = 1e-12;

/// `η(k) = η0 (ηf/η0)^(k/k_max)`, held at `ηf` past `k_max`.
pub fn mixing_rate(k: usize, cfg: &SamplerConfig) -> f64 {
    let k_max = cfg.k_max();
    let t = k.min(k_max) as f64 / k_max as f64;
    if k >= k_max {
        return cfg.eta_final;
    }
    cfg.eta0 * (cfg.eta_final / cfg.eta0).powf(t)
}

/// Probability of accepting an update after batch `k` when the divergence
/// estimate changed by `delta`: 1 on improvement, else `min(1, e^(−kδ))`.
pub fn acceptance_probability(k: usize, delta: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-(k as f64) * delta).exp().min(1.0)
    }
}

/// `D̂ = −(1/m) Σ ln(P(h_i, e) / Q(h_i))` over a batch whose ratios are all
/// positive.
pub fn kl_estimate<T: Real>(batch: &[SampleRecord<T>]) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let mut sum = T::zero();
    for s in batch {
        if s.log_ratio == T::neg_infinity() {
            return Err(Error::ZeroRatio);
        }
        sum = sum + s.log_ratio;
    }
    Ok(-sum / T::from_count(batch.len()))
}

/// Divergence estimate of a batch that may contain infeasible samples:
/// `−mean(ln ratio over feasible samples) − ln(feasible fraction)`.
/// Equal to [`kl_estimate`] when every sample is feasible; `None` when none
/// is.
pub fn batch_divergence<T: Real>(batch: &[SampleRecord<T>]) -> Option<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for s in batch {
        if s.log_ratio != T::neg_infinity() {
            sum = sum + s.log_ratio;
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let mean = -sum / T::from_count(count);
    if count == batch.len() {
        Some(mean)
    } else {
        Some(mean - (T::from_count(count) / T::from_count(batch.len())).ln())
    }
}

/// Coefficient of variation (sample standard deviation over mean) of the
/// batch ratios. Zero for a single sample; `+inf` when every ratio is zero.
pub fn coefficient_of_variation<T: Real>(log_ratios: &[T]) -> f64 {
    let max = log_ratios.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return f64::INFINITY;
    }
    let n = log_ratios.len();
    if n < 2 {
        return 0.0;
    }
    let scaled: Vec<f64> = log_ratios.iter().map(|&l| (l - max).as_f64().exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n as f64;
    let var = scaled.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64;
    var.sqrt() / mean
}

/// `w_1 = w0`, afterwards `max(w0, 1/(σ̂ + ε))`.
pub fn batch_weight(sigma: f64, first: bool, cfg: &SamplerConfig) -> f64 {
    if first {
        cfg.w0
    } else {
        cfg.w0.max(1.0 / (sigma + WEIGHT_EPSILON))
    }
}

/// Running sums of the weighted estimator.
#[derive(Clone, Debug)]
pub struct EstimatorState<T> {
    numerator: LogSumExp<T>,
    denominator: T,
    batches: usize,
}

impl<T: Real> Default for EstimatorState<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> EstimatorState<T> {
    pub fn new() -> Self {
        Self { numerator: LogSumExp::new(), denominator: T::zero(), batches: 0 }
    }

    /// Adds one batch of log ratios with weight `w`.
    pub fn record(&mut self, log_ratios: &[T], w: T) {
        let lw = w.ln();
        for &l in log_ratios {
            self.numerator.push(if w == T::one() { l } else { lw + l });
        }
        self.denominator = self.denominator + T::from_count(log_ratios.len()) * w;
        self.batches += 1;
    }

    pub fn batches(&self) -> usize {
        self.batches
    }
}

/// `ln( Σ_k Σ_i w_k r_i / Σ_k M_k w_k )`.
pub fn combine_batches<T: Real>(state: &EstimatorState<T>) -> T {
    state.numerator.ln() - state.denominator.ln()
}

/// Weighted power mean `M_w^r(z)`; weights must sum to one.
pub fn power_mean<T: Real>(z: &[T], w: &[T], r: T) -> Result<T> {
    if z.len() != w.len() || z.iter().chain(w).any(|&x| x.is_nan() || x <= T::zero()) {
        return Err(Error::NonPositive);
    }
    if r == T::zero() {
        let s: T = z.iter().zip(w).map(|(&zi, &wi)| wi * zi.ln()).sum();
        return Ok(s.exp());
    }
    let mut acc = LogSumExp::new();
    for (&zi, &wi) in z.iter().zip(w) {
        acc.push(wi.ln() + r * zi.ln());
    }
    Ok((acc.ln() / r).exp())
}

/// Pearson correlation; `None` for short or constant series.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Smallest `|r|` significant for a two-sided t-test with `n − 2` degrees of
/// freedom.
pub fn correlation_threshold(n: usize, significance: f64) -> f64 {
    let df = (n - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(1.0 - significance / 2.0);
    t / (t * t + df).sqrt()
}

/// Decides a directing event from the last `l` pairs `(D̂_k, ln P̃_k)`.
///
/// The series correlated with `ln P̃_k` is the batch mean log ratio `−D̂_k`.
/// A significant positive correlation means the estimates sit below the
/// likelihood and the proposal is sharpened; a significant negative one
/// means they sit above and it is flattened.
pub fn correlation_trigger(window: &[(f64, f64)], cfg: &SamplerConfig) -> Option<Direction> {
    if window.len() < cfg.window.max(3) {
        return None;
    }
    let x: Vec<f64> = window.iter().map(|&(d, _)| -d).collect();
    let y: Vec<f64> = window.iter().map(|&(_, p)| p).collect();
    let r = pearson(&x, &y)?;
    if r.abs() <= correlation_threshold(window.len(), cfg.significance) {
        return None;
    }
    Some(if r > 0.0 { Direction::Sharpen } else { Direction::Flatten })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        let cfg = SamplerConfig::default();
        assert!((mixing_rate(0, &cfg) - 0.12).abs() < 1e-12);
        assert!((mixing_rate(cfg.k_max(), &cfg) - 0.03).abs() < 1e-12);
        assert!((mixing_rate(cfg.k_max() / 2, &cfg) - 0.06).abs() < 1e-12);
        assert_eq!(mixing_rate(10 * cfg.k_max(), &cfg), 0.03);
    }

    #[test]
    fn acceptance_values() {
        assert_eq!(acceptance_probability(3, -0.1), 1.0);
        assert_eq!(acceptance_probability(3, 0.0), 1.0);
        assert!((acceptance_probability(5, 0.2) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn kl_estimate_mean_of_logs() {
        let rec = |l: f64| SampleRecord { assignment: vec![], log_q: 0.0, log_p: l, log_ratio: l };
        assert_eq!(kl_estimate(&[rec(2.0), rec(4.0)]).unwrap(), -3.0);
        assert!(matches!(kl_estimate(&[rec(2.0), rec(f64::NEG_INFINITY)]), Err(Error::ZeroRatio)));
        let d = batch_divergence(&[rec(2.0), rec(f64::NEG_INFINITY)]).unwrap();
        assert!((d - (-2.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn weights() {
        let cfg = SamplerConfig::default();
        assert_eq!(batch_weight(7.0, true, &cfg), 0.001);
        assert!((batch_weight(4.0, false, &cfg) - 0.25).abs() < 1e-12);
        assert!(batch_weight(0.0, false, &cfg) > 1e11);
        assert_eq!(batch_weight(1e6, false, &cfg), 0.001);
    }

    #[test]
    fn power_means() {
        let h = [0.5f64, 0.5];
        assert!((power_mean(&[2.0, 4.0], &h, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((power_mean(&[2.0, 8.0], &h, 0.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(power_mean(&[0.0, 8.0], &h, 1.0).is_err());
        let near = power_mean(&[2.0, 8.0], &h, 1e-9).unwrap();
        assert!((near - 4.0).abs() < 1e-6);
    }

    #[test]
    fn pearson_values() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(1.0));
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]), Some(-1.0));
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 0.981_980_506_061_965_7).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn threshold_for_window_ten() {
        assert!((correlation_threshold(10, 0.05) - 0.6319).abs() < 1e-4);
    }

    #[test]
    fn trigger_directions() {
        let cfg = SamplerConfig::default();
        let d: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let same: Vec<(f64, f64)> = d.iter().map(|&x| (x, x)).collect();
        let opposite: Vec<(f64, f64)> = d.iter().map(|&x| (x, -x)).collect();
        assert_eq!(correlation_trigger(&same, &cfg), Some(Direction::Flatten));
        assert_eq!(correlation_trigger(&opposite, &cfg), Some(Direction::Sharpen));
        assert_eq!(correlation_trigger(&same[..5], &cfg), None);
        let weak: Vec<(f64, f64)> = [
            (1.0, 2.0),
            (2.0, 1.0),
            (3.0, 4.0),
            (4.0, 3.0),
            (5.0, 2.5),
            (6.0, 6.0),
            (7.0, 3.0),
            (8.0, 5.0),
            (9.0, 2.0),
            (10.0, 4.0),
        ]
        .to_vec();
        let r = pearson(&weak.iter().map(|p| p.0).collect::<Vec<_>>(), &weak.iter().map(|p| p.1).collect::<Vec<_>>())
            .unwrap();
        assert!(r.abs() < 0.6319);
        assert_eq!(correlation_trigger(&weak, &cfg), None);
    }
}
