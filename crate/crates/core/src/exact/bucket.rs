use crate::error::{Error, Result};
use crate::exact::factor::{check_cap, table_size, Factor};
use crate::exact::order::{EliminationOrder, InteractionGraph};
use crate::model::{BayesianNetwork, Evidence};
use crate::num::Real;

/// Default cap on the joint state space enumerated by the brute-force oracle.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 24;
/// Default cap on the number of entries of any intermediate table.
pub const DEFAULT_TABLE_CAP: usize = 1 << 24;

/// Size limits for exact computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub enumeration: usize,
    pub table: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { enumeration: DEFAULT_ENUMERATION_CAP, table: DEFAULT_TABLE_CAP }
    }
}

/// One bucket after elimination.
#[derive(Clone, Debug)]
pub struct Bucket<T> {
    pub variable: usize,
    /// Input CPTs and incoming messages placed in this bucket.
    pub tables: Vec<Factor<T>>,
    /// Product of `tables`, clamped when the variable is observed:
    /// a table over the variable and its separator.
    pub joint: Factor<T>,
    /// `joint` with the variable summed out.
    pub message: Factor<T>,
    /// Bucket receiving `message`; `None` when the message is a constant.
    pub receiver: Option<usize>,
}

impl<T: Real> Bucket<T> {
    /// Separator variables: the scope of the outgoing message.
    pub fn separator(&self) -> &[usize] {
        self.message.scope()
    }
}

/// Every intermediate table of a bucket-elimination run.
#[derive(Clone, Debug)]
pub struct BucketScheme<T> {
    order: EliminationOrder,
    position: Vec<usize>,
    cpt_bucket: Vec<usize>,
    buckets: Vec<Bucket<T>>,
}

impl<T: Real> BucketScheme<T> {
    pub fn order(&self) -> &EliminationOrder {
        &self.order
    }

    /// Index of each variable in the sampling order (reverse elimination).
    pub fn position(&self, var: usize) -> usize {
        self.position[var]
    }

    pub fn positions(&self) -> &[usize] {
        &self.position
    }

    /// Bucket that received the CPT of `var`.
    pub fn cpt_bucket(&self, var: usize) -> usize {
        self.cpt_bucket[var]
    }

    pub fn bucket(&self, var: usize) -> &Bucket<T> {
        &self.buckets[var]
    }

    pub fn buckets(&self) -> &[Bucket<T>] {
        &self.buckets
    }
}

/// Exact `ln P(e)` by bucket elimination along `ord`, keeping every bucket
/// table.
///
/// Each CPT goes to the bucket of the first variable of its scope to be
/// eliminated. Processing buckets in elimination order, the bucket product is
/// clamped to the observed value when the bucket variable is evidence, the
/// variable is summed out, and the message moves to the bucket of the next
/// variable of its scope to be eliminated.
pub fn bucket_eliminate<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    ord: &EliminationOrder,
    table_cap: usize,
) -> Result<(T, BucketScheme<T>)> {
    let n = net.num_vars();
    if !ord.is_permutation_of(n) {
        return Err(Error::InvalidOrder(format!(
            "order of length {} is not a permutation of {} variables",
            ord.len(),
            n
        )));
    }
    ev.check(net)?;
    let mut position = vec![0; n];
    for (i, &v) in ord.reversed().iter().enumerate() {
        position[v] = i;
    }
    let latest = |scope: &[usize]| scope.iter().copied().max_by_key(|&v| position[v]);

    let mut pending: Vec<Vec<Factor<T>>> = vec![Vec::new(); n];
    let cpt_bucket: Vec<usize> = (0..n)
        .map(|v| {
            let f = Factor::from_cpt(net, v);
            let b = latest(f.scope()).expect("cpt scope contains its child");
            pending[b].push(f);
            b
        })
        .collect();

    let mut log_result = T::zero();
    let mut buckets: Vec<Option<Bucket<T>>> = (0..n).map(|_| None).collect();
    for &v in ord.order() {
        let tables = std::mem::take(&mut pending[v]);
        let mut scope_size: Vec<usize> = Vec::new();
        for f in &tables {
            for &u in f.scope() {
                if !scope_size.contains(&u) {
                    scope_size.push(u);
                }
            }
        }
        check_cap("bucket table", table_size(scope_size.iter().map(|&u| net.card(u))), table_cap)?;
        let mut joint = Factor::product_all(&tables, table_cap)?;
        if !joint.contains(v) {
            joint = joint.product(&Factor::ones(vec![v], vec![net.card(v)]), table_cap)?;
        }
        if let Some(s) = ev.get(v) {
            joint.clamp(v, s);
        }
        let message = joint.sum_out(v);
        let receiver = latest(message.scope());
        match receiver {
            Some(r) => pending[r].push(message.clone()),
            None => {
                let c = message.log_values()[0];
                log_result = if c == T::neg_infinity() || log_result == T::neg_infinity() {
                    T::neg_infinity()
                } else {
                    log_result + c
                };
            }
        }
        buckets[v] = Some(Bucket { variable: v, tables, joint, message, receiver });
    }

    let scheme = BucketScheme {
        order: ord.clone(),
        position,
        cpt_bucket,
        buckets: buckets.into_iter().map(|b| b.expect("every variable eliminated")).collect(),
    };
    Ok((log_result, scheme))
}

/// Sums every variable outside `keep` out of the product of `factors`,
/// eliminating in min-fill order. Returns a factor over the kept variables
/// that occur in the inputs.
pub fn variable_elimination<T: Real>(
    num_vars: usize,
    factors: Vec<Factor<T>>,
    keep: &[usize],
    table_cap: usize,
) -> Result<Factor<T>> {
    let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.scope().to_vec()).collect();
    let mut present = vec![false; num_vars];
    scopes.iter().flatten().for_each(|&v| present[v] = true);
    let candidates: Vec<usize> = (0..num_vars).filter(|&v| present[v] && !keep.contains(&v)).collect();
    let (order, _) = InteractionGraph::from_scopes(num_vars, &scopes).min_fill(&candidates);

    let mut pool = factors;
    for v in order {
        let (with, without): (Vec<_>, Vec<_>) = pool.into_iter().partition(|f| f.contains(v));
        pool = without;
        let prod = Factor::product_all(&with, table_cap)?;
        pool.push(prod.sum_out(v));
    }
    Factor::product_all(&pool, table_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{enumerate_likelihood, min_fill_order};
    use crate::model::{CptRows, Variable};

    fn or_gate() -> BayesianNetwork<f64> {
        BayesianNetwork::new(
            vec![
                Variable::with_cardinality("A", 2),
                Variable::with_cardinality("B", 2),
                Variable::with_cardinality("D", 2),
            ],
            vec![
                CptRows::new(0, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(1, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(2, vec![0, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn or_gate_likelihood() {
        let net = or_gate();
        let ev = Evidence::from_pairs([(2, 0)]);
        let (lp, scheme) = bucket_eliminate(&net, &ev, &min_fill_order(&net), 1 << 20).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-12);
        for v in 0..3 {
            let b = scheme.bucket(v);
            assert!(b.joint.contains(v));
            assert!(!b.message.contains(v));
        }
    }

    #[test]
    fn all_observed_is_joint_probability() {
        let net = or_gate();
        let ev = Evidence::from_pairs([(0, 1), (1, 0), (2, 1)]);
        let (lp, _) = bucket_eliminate(&net, &ev, &min_fill_order(&net), 1 << 20).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-12);
        assert!((lp - enumerate_likelihood(&net, &ev, 1 << 20).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn every_cpt_lands_in_its_latest_bucket() {
        let net = or_gate();
        let (_, scheme) = bucket_eliminate(&net, &Evidence::new(), &min_fill_order(&net), 1 << 20).unwrap();
        for v in 0..3 {
            let b = scheme.cpt_bucket(v);
            let mut scope = net.parents(v).to_vec();
            scope.push(v);
            let max = scope.iter().map(|&u| scheme.position(u)).max().unwrap();
            assert_eq!(scheme.position(b), max);
        }
    }

    #[test]
    fn rejects_bad_order() {
        let net = or_gate();
        let ord = EliminationOrder::from_order(3, &[], vec![0, 1]);
        assert!(matches!(bucket_eliminate(&net, &Evidence::new(), &ord, 1 << 20), Err(Error::InvalidOrder(_))));
    }

    #[test]
    fn table_cap_enforced() {
        let net = or_gate();
        assert!(matches!(
            bucket_eliminate(&net, &Evidence::new(), &min_fill_order(&net), 4),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn variable_elimination_marginal() {
        let net = or_gate();
        let factors = (0..3).map(|v| Factor::from_cpt(&net, v)).collect();
        let m = variable_elimination(3, factors, &[2], 1 << 20).unwrap();
        assert_eq!(m.scope(), &[2]);
        assert!((m.log_value_local(&[0]) - 0.25f64.ln()).abs() < 1e-12);
        assert!((m.log_value_local(&[1]) - 0.75f64.ln()).abs() < 1e-12);
    }
}
