//! Scalar abstraction and log-domain arithmetic.
//!
//! Everything numeric in the crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Probabilities are combined in log space;
//! an exact zero is represented by `-inf`, never by a tiny positive value.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable throughout the engine.
pub trait Real: Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// The log-domain zero marker.
    #[inline]
    fn log_zero() -> Self {
        Self::neg_infinity()
    }

    /// Most negative finite log value the type can represent as a
    /// probability, `ln(min_positive)`. Used as a finite stand-in for
    /// `ln 0` where a finite penalty is needed.
    #[inline]
    fn log_tiny() -> Self {
        Self::min_positive_value().ln()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln(e^a + e^b)` with `-inf` treated as log-zero.
#[inline]
pub fn log_add<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stabilized log-sum-exp over a slice. Empty input gives log-zero.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let mut acc = LogSumExp::new();
    for &x in xs {
        acc.push(x);
    }
    acc.ln()
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum and the sum of `exp(x - max)`, rescaling the sum
/// whenever a new maximum arrives. The result depends on push order only
/// through floating point rounding, so the same sequence always gives the
/// same bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSumExp<T> {
    max: T,
    scaled: T,
}

impl<T: Real> Default for LogSumExp<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LogSumExp<T> {
    pub fn new() -> Self {
        Self { max: T::neg_infinity(), scaled: T::zero() }
    }

    pub fn push(&mut self, x: T) {
        if x == T::neg_infinity() {
            return;
        }
        if self.max == T::neg_infinity() {
            self.max = x;
            self.scaled = T::one();
        } else if x <= self.max {
            self.scaled = self.scaled + (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + T::one();
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.max == T::neg_infinity() {
            return;
        }
        if self.max == T::neg_infinity() {
            *self = *other;
        } else if other.max <= self.max {
            self.scaled = self.scaled + other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    /// `ln Σ exp(x)`; log-zero when nothing finite was pushed.
    pub fn ln(&self) -> T {
        if self.max == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.max + self.scaled.ln()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.max == T::neg_infinity()
    }
}

/// Natural log with an exact zero mapped to `-inf`.
#[inline]
pub fn ln_or_zero<T: Real>(p: T) -> T {
    if p <= T::zero() {
        T::neg_infinity()
    } else {
        p.ln()
    }
}
