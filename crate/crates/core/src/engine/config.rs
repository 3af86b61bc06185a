use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::DEFAULT_TABLE_CAP;
use crate::simplify::FitMethod;

/// Parameters of a sampling run. Defaults are the published settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    /// Total number of samples `M`.
    pub samples: usize,
    /// Batch size `m`.
    pub batch: usize,
    /// Horizon of the mixing-rate schedule; `M / m` when unset.
    pub k_max: Option<usize>,
    pub eta0: f64,
    pub eta_final: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Correlation window `l`.
    pub window: usize,
    /// Initial batch weight.
    pub w0: f64,
    /// Two-sided significance level of the correlation test.
    pub significance: f64,
    /// Batches without directing after an event; `l` when unset.
    pub cooldown: Option<usize>,
    /// Induced-width bound for edge deletion.
    pub width_bound: usize,
    pub fit: FitMethod,
    pub fit_sweeps: usize,
    pub fit_tol: f64,
    pub table_cap: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            batch: 1000,
            k_max: None,
            eta0: 0.12,
            eta_final: 0.03,
            alpha: 0.1,
            beta: 0.2,
            window: 10,
            w0: 0.001,
            significance: 0.05,
            cooldown: None,
            width_bound: 3,
            fit: FitMethod::Moment,
            fit_sweeps: 20,
            fit_tol: 1e-6,
            table_cap: DEFAULT_TABLE_CAP,
            workers: 1,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or(self.samples / self.batch.max(1)).max(1)
    }

    pub fn cooldown(&self) -> usize {
        self.cooldown.unwrap_or(self.window)
    }

    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.samples == 0 {
            return fail("samples must be at least 1".into());
        }
        if self.batch == 0 {
            return fail("batch size must be at least 1".into());
        }
        if !(0.0 < self.eta_final && self.eta_final <= self.eta0 && self.eta0 < 1.0) {
            return fail(format!("need 0 < etaf <= eta0 < 1, got eta0 {} etaf {}", self.eta0, self.eta_final));
        }
        if !(0.0 < self.alpha && self.alpha < 0.5) {
            return fail(format!("alpha must lie in (0, 0.5), got {}", self.alpha));
        }
        if !(0.0 < self.beta && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.window < 3 {
            return fail(format!("window must be at least 3, got {}", self.window));
        }
        if self.w0.is_nan() || self.w0 <= 0.0 {
            return fail(format!("w0 must be positive, got {}", self.w0));
        }
        if !(0.0 < self.significance && self.significance < 1.0) {
            return fail(format!("significance must lie in (0, 1), got {}", self.significance));
        }
        if self.k_max == Some(0) {
            return fail("kmax must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        Ok(())
    }
}

/// Which adaptation mechanisms a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    pub adaptive: bool,
    pub directing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { adaptive: true, directing: true }
    }
}

impl RunOptions {
    pub const STATIC: Self = Self { adaptive: false, directing: false };
}
