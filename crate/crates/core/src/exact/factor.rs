use crate::error::{Error, Result};
use crate::model::BayesianNetwork;
use crate::num::{LogSumExp, Real};

/// Nonnegative table over a scope of variables, stored as natural logs.
///
/// Layout is row-major with the first scope variable most significant. An
/// exact zero is stored as `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor<T> {
    scope: Vec<usize>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    log_values: Vec<T>,
}

fn strides_for(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; cards.len()];
    let mut s = 1;
    for k in (0..cards.len()).rev() {
        strides[k] = s;
        s *= cards[k];
    }
    strides
}

/// Number of entries a table over `cards` needs, without overflowing.
pub(crate) fn table_size(cards: impl IntoIterator<Item = usize>) -> u128 {
    cards.into_iter().fold(1u128, |acc, c| acc.saturating_mul(c as u128))
}

pub(crate) fn check_cap(what: &'static str, required: u128, cap: usize) -> Result<()> {
    if required > cap as u128 {
        Err(Error::CapExceeded { what, required, cap })
    } else {
        Ok(())
    }
}

impl<T: Real> Factor<T> {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, log_values: Vec<T>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(log_values.len(), cards.iter().product::<usize>());
        let strides = strides_for(&cards);
        Self { scope, cards, strides, log_values }
    }

    /// Scalar factor with an empty scope.
    pub fn constant(log_value: T) -> Self {
        Self::new(Vec::new(), Vec::new(), vec![log_value])
    }

    /// All-ones table over a scope.
    pub fn ones(scope: Vec<usize>, cards: Vec<usize>) -> Self {
        let n = cards.iter().product();
        Self::new(scope, cards, vec![T::zero(); n])
    }

    /// The CPT of `var` as a factor over `(parents..., var)`.
    pub fn from_cpt(net: &BayesianNetwork<T>, var: usize) -> Self {
        let cpt = net.cpt(var);
        let mut scope = cpt.parents().to_vec();
        scope.push(var);
        let cards = scope.iter().map(|&v| net.card(v)).collect();
        Self::new(scope, cards, cpt.log_table().to_vec())
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn log_values(&self) -> &[T] {
        &self.log_values
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    /// Entry for the scope variables' values in a network-wide assignment.
    #[inline]
    pub fn log_value_at(&self, full: &[usize]) -> T {
        let idx: usize = self.scope.iter().zip(&self.strides).map(|(&v, &s)| full[v] * s).sum();
        self.log_values[idx]
    }

    /// Entry for a configuration given in scope order.
    pub fn log_value_local(&self, config: &[usize]) -> T {
        let idx: usize = config.iter().zip(&self.strides).map(|(&x, &s)| x * s).sum();
        self.log_values[idx]
    }

    /// Pointwise product over the union scope (`self`'s order first).
    pub fn product(&self, other: &Self, cap: usize) -> Result<Self> {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        check_cap("factor product", table_size(cards.iter().copied()), cap)?;
        let a_strides: Vec<usize> = scope.iter().map(|&v| self.position(v).map_or(0, |k| self.strides[k])).collect();
        let b_strides: Vec<usize> = scope.iter().map(|&v| other.position(v).map_or(0, |k| other.strides[k])).collect();
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut config = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            let a = self.log_values[ia];
            let b = other.log_values[ib];
            values.push(if a == T::neg_infinity() || b == T::neg_infinity() { T::neg_infinity() } else { a + b });
            // odometer increment, last variable fastest
            for k in (0..scope.len()).rev() {
                config[k] += 1;
                ia += a_strides[k];
                ib += b_strides[k];
                if config[k] < cards[k] {
                    break;
                }
                ia -= a_strides[k] * cards[k];
                ib -= b_strides[k] * cards[k];
                config[k] = 0;
            }
        }
        Ok(Self::new(scope, cards, values))
    }

    /// Product of a list of factors; the empty product is the constant 1.
    pub fn product_all<'a>(factors: impl IntoIterator<Item = &'a Self>, cap: usize) -> Result<Self>
    where
        T: 'a,
    {
        let mut acc = Self::constant(T::zero());
        for f in factors {
            acc = acc.product(f, cap)?;
        }
        Ok(acc)
    }

    /// Sums `var` out of the table.
    pub fn sum_out(&self, var: usize) -> Self {
        let Some(k) = self.position(var) else { return self.clone() };
        let card = self.cards[k];
        let stride = self.strides[k];
        let outer = self.log_values.len() / (card * stride);
        let mut values = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            for i in 0..stride {
                let mut acc = LogSumExp::new();
                for x in 0..card {
                    acc.push(self.log_values[o * card * stride + x * stride + i]);
                }
                values.push(acc.ln());
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(k);
        cards.remove(k);
        Self::new(scope, cards, values)
    }

    /// Sums out every variable not in `keep`.
    pub fn marginalize_to(&self, keep: &[usize]) -> Self {
        let mut f = self.clone();
        for &v in &self.scope {
            if !keep.contains(&v) {
                f = f.sum_out(v);
            }
        }
        f
    }

    /// Zeroes every entry where `var` differs from `state`.
    pub fn clamp(&mut self, var: usize, state: usize) {
        let Some(k) = self.position(var) else { return };
        let card = self.cards[k];
        let stride = self.strides[k];
        for (idx, v) in self.log_values.iter_mut().enumerate() {
            if (idx / stride) % card != state {
                *v = T::neg_infinity();
            }
        }
    }

    /// Copy with the scope reordered to `order` (a permutation of the scope).
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.scope.len());
        let cards: Vec<usize> = order.iter().map(|&v| self.cards[self.position(v).unwrap()]).collect();
        let src_strides: Vec<usize> = order.iter().map(|&v| self.strides[self.position(v).unwrap()]).collect();
        let size = self.log_values.len();
        let mut values = Vec::with_capacity(size);
        let mut config = vec![0usize; order.len()];
        let mut src = 0usize;
        for _ in 0..size {
            values.push(self.log_values[src]);
            for k in (0..order.len()).rev() {
                config[k] += 1;
                src += src_strides[k];
                if config[k] < cards[k] {
                    break;
                }
                src -= src_strides[k] * cards[k];
                config[k] = 0;
            }
        }
        Self::new(order.to_vec(), cards, values)
    }

    /// `ln Σ` of all entries.
    pub fn log_total(&self) -> T {
        let mut acc = LogSumExp::new();
        self.log_values.iter().for_each(|&v| acc.push(v));
        acc.ln()
    }

    /// Entries converted to linear scale.
    pub fn linear_values(&self) -> Vec<T> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }
}
