use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::validate::validate_parts;
use crate::num::{ln_or_zero, Real};

/// Row-sum tolerance accepted on input; rows are renormalized afterwards.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// A discrete variable with named states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, states: &[&str]) -> Self {
        Self { name: name.into(), states: states.iter().map(|s| s.to_string()).collect() }
    }

    /// Variable whose states are labelled `0..card`.
    pub fn with_cardinality(name: impl Into<String>, card: usize) -> Self {
        Self { name: name.into(), states: (0..card).map(|s| s.to_string()).collect() }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional probability table as supplied by a caller: one row per parent
/// configuration, first parent most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct CptRows<T> {
    pub child: usize,
    pub parents: Vec<usize>,
    pub rows: Vec<Vec<T>>,
}

impl<T> CptRows<T> {
    pub fn new(child: usize, parents: Vec<usize>, rows: Vec<Vec<T>>) -> Self {
        Self { child, parents, rows }
    }
}

/// Validated conditional probability table stored as a flat row-major array.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt<T> {
    child: usize,
    parents: Vec<usize>,
    parent_strides: Vec<usize>,
    card: usize,
    table: Vec<T>,
    log_table: Vec<T>,
}

impl<T: Real> Cpt<T> {
    fn build(rows: CptRows<T>, cards: &[usize]) -> Self {
        let card = cards[rows.child];
        let mut parent_strides = vec![0; rows.parents.len()];
        let mut stride = 1;
        for (k, &p) in rows.parents.iter().enumerate().rev() {
            parent_strides[k] = stride;
            stride *= cards[p];
        }
        let mut table = Vec::with_capacity(stride * card);
        // Renormalize only rows visibly off 1 so that a second load of
        // already-normalized rows is bit-identical.
        let slack = T::epsilon() * T::from_count(4 * card);
        for row in rows.rows {
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > slack {
                table.extend(row.into_iter().map(|p| p / sum));
            } else {
                table.extend(row);
            }
        }
        let log_table = table.iter().map(|&p| ln_or_zero(p)).collect();
        Self { child: rows.child, parents: rows.parents, parent_strides, card, table, log_table }
    }

    pub fn child(&self) -> usize {
        self.child
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn cardinality(&self) -> usize {
        self.card
    }

    pub fn num_rows(&self) -> usize {
        self.table.len() / self.card
    }

    /// Row index of the parent configuration found in a full assignment.
    #[inline]
    pub fn row_index(&self, full: &[usize]) -> usize {
        self.parents.iter().zip(&self.parent_strides).map(|(&p, &s)| full[p] * s).sum()
    }

    /// Parent configuration (state per parent) for a row index.
    pub fn row_config(&self, mut row: usize) -> Vec<usize> {
        self.parent_strides
            .iter()
            .map(|&s| {
                let v = row / s;
                row %= s;
                v
            })
            .collect()
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.table[row * self.card..(row + 1) * self.card]
    }

    pub fn log_row(&self, row: usize) -> &[T] {
        &self.log_table[row * self.card..(row + 1) * self.card]
    }

    #[inline]
    pub fn prob(&self, row: usize, state: usize) -> T {
        self.table[row * self.card + state]
    }

    #[inline]
    pub fn log_prob(&self, row: usize, state: usize) -> T {
        self.log_table[row * self.card + state]
    }

    /// Flat table, `num_rows * cardinality` entries.
    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn log_table(&self) -> &[T] {
        &self.log_table
    }

    /// A row is deterministic iff exactly one entry is 1.
    pub fn is_deterministic_row(&self, row: usize) -> bool {
        let r = self.row(row);
        r.iter().filter(|&&p| p == T::one()).count() == 1
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.table.chunks(self.card).map(|c| c.to_vec()).collect()
    }

    pub fn to_rows(&self) -> CptRows<T> {
        CptRows::new(self.child, self.parents.clone(), self.rows())
    }
}

/// Discrete Bayesian network. Always valid once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesianNetwork<T> {
    variables: Vec<Variable>,
    cpts: Vec<Cpt<T>>,
    children: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl<T: Real> BayesianNetwork<T> {
    /// Validates and builds a network. Rows whose sums are within
    /// [`ROW_SUM_TOLERANCE`] of 1 are renormalized.
    pub fn new(variables: Vec<Variable>, cpts: Vec<CptRows<T>>) -> Result<Self> {
        let report = validate_parts(&variables, &cpts);
        if !report.is_empty() {
            return Err(Error::Invalid(report));
        }
        Ok(Self::build(variables, cpts))
    }

    fn build(variables: Vec<Variable>, mut cpts: Vec<CptRows<T>>) -> Self {
        let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
        cpts.sort_by_key(|c| c.child);
        let mut children = vec![Vec::new(); variables.len()];
        for c in &cpts {
            for &p in &c.parents {
                children[p].push(c.child);
            }
        }
        let index = variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let cpts = cpts.into_iter().map(|c| Cpt::build(c, &cards)).collect();
        Self { variables, cpts, children, index }
    }

    /// Same variables, new tables. The result is validated again.
    pub fn with_cpts(&self, cpts: Vec<CptRows<T>>) -> Result<Self> {
        Self::new(self.variables.clone(), cpts)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.variables[i].name
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn card(&self, i: usize) -> usize {
        self.variables[i].cardinality()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    pub fn cpt(&self, i: usize) -> &Cpt<T> {
        &self.cpts[i]
    }

    pub fn cpts(&self) -> &[Cpt<T>] {
        &self.cpts
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        self.cpts[i].parents()
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// All edges `(parent, child)` in child declaration order, then parent order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.cpts.iter().flat_map(|c| c.parents.iter().map(move |&p| (p, c.child))).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.cpts.iter().map(|c| c.parents.len()).sum()
    }

    /// `ln P(x)` for a complete assignment. `-inf` when any factor is zero.
    #[inline]
    pub fn log_prob_full(&self, full: &[usize]) -> T {
        let mut acc = T::zero();
        for cpt in &self.cpts {
            let lp = cpt.log_prob(cpt.row_index(full), full[cpt.child]);
            if lp == T::neg_infinity() {
                return lp;
            }
            acc = acc + lp;
        }
        acc
    }

    /// `ln P(x)` for an assignment that must cover every variable.
    pub fn joint_log_prob(&self, assignment: &Assignment) -> Result<T> {
        let full = assignment.to_full().ok_or_else(|| {
            let missing = assignment.values.iter().position(Option::is_none).unwrap_or(0);
            Error::IncompleteAssignment(self.variables.get(missing).map(|v| v.name.clone()).unwrap_or_default())
        })?;
        if full.len() != self.num_vars() {
            return Err(Error::IncompleteAssignment(format!(
                "expected {} values, got {}",
                self.num_vars(),
                full.len()
            )));
        }
        Ok(self.log_prob_full(&full))
    }

    /// Parents before children, ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<usize> {
        let parents: Vec<&[usize]> = self.cpts.iter().map(|c| c.parents()).collect();
        topological_sort(&parents).expect("validated network is acyclic")
    }

    /// Fraction of CPT rows that are point masses.
    pub fn deterministic_fraction(&self) -> f64 {
        let (det, total) = self.cpts.iter().fold((0usize, 0usize), |(d, t), c| {
            let n = c.num_rows();
            (d + (0..n).filter(|&r| c.is_deterministic_row(r)).count(), t + n)
        });
        if total == 0 {
            0.0
        } else {
            det as f64 / total as f64
        }
    }

    pub fn to_rows(&self) -> Vec<CptRows<T>> {
        self.cpts.iter().map(Cpt::to_rows).collect()
    }
}

/// Kahn's algorithm picking the smallest ready index first. Returns the
/// variables left on a cycle when the relation is cyclic.
pub(crate) fn topological_sort(parents: &[&[usize]]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps.iter() {
            children[p].push(c);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

/// Observed variables and their states.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    observed: BTreeMap<usize, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { observed: pairs.into_iter().collect() }
    }

    /// Resolves `{variable name: state label}` against a network.
    pub fn from_labels<T: Real>(net: &BayesianNetwork<T>, labels: &BTreeMap<String, String>) -> Result<Self> {
        let mut observed = BTreeMap::new();
        for (name, label) in labels {
            let v = net.var_index(name).ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            let s = net
                .variable(v)
                .state_index(label)
                .ok_or_else(|| Error::UnknownState { variable: name.clone(), state: label.clone() })?;
            observed.insert(v, s);
        }
        Ok(Self { observed })
    }

    pub fn to_labels<T: Real>(&self, net: &BayesianNetwork<T>) -> BTreeMap<String, String> {
        self.observed.iter().map(|(&v, &s)| (net.name(v).to_string(), net.variable(v).states[s].clone())).collect()
    }

    pub fn insert(&mut self, var: usize, state: usize) {
        self.observed.insert(var, state);
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.observed.get(&var).copied()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.observed.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.observed.iter().map(|(&v, &s)| (v, s))
    }

    /// Dense view: `Some(state)` for observed variables.
    pub fn as_partial(&self, num_vars: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; num_vars];
        for (&v, &s) in &self.observed {
            out[v] = Some(s);
        }
        out
    }

    /// Unobserved variables in declaration order.
    pub fn hidden(&self, num_vars: usize) -> Vec<usize> {
        (0..num_vars).filter(|v| !self.observed.contains_key(v)).collect()
    }

    /// Checks every observed variable and state exists in `net`.
    pub fn check<T: Real>(&self, net: &BayesianNetwork<T>) -> Result<()> {
        for (&v, &s) in &self.observed {
            if v >= net.num_vars() {
                return Err(Error::UnknownVariable(format!("#{v}")));
            }
            if s >= net.card(v) {
                return Err(Error::UnknownState { variable: net.name(v).to_string(), state: format!("#{s}") });
            }
        }
        Ok(())
    }
}

/// Full or partial assignment of state indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(num_vars: usize) -> Self {
        Self { values: vec![None; num_vars] }
    }

    pub fn full(values: Vec<usize>) -> Self {
        Self { values: values.into_iter().map(Some).collect() }
    }

    pub fn set(&mut self, var: usize, state: usize) {
        self.values[var] = Some(state);
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.values.get(var).copied().flatten()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn to_full(&self) -> Option<Vec<usize>> {
        self.values.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BayesianNetwork<f64> {
        BayesianNetwork::new(
            vec![Variable::with_cardinality("A", 2), Variable::with_cardinality("B", 2)],
            vec![
                CptRows::new(0, vec![], vec![vec![0.7, 0.3]]),
                CptRows::new(1, vec![0], vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn joint_log_prob_is_product_of_entries() {
        let net = chain();
        let lp = net.joint_log_prob(&Assignment::full(vec![1, 1])).unwrap();
        assert!((lp - 0.27f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn joint_sums_to_one_by_enumeration() {
        let net = chain();
        let total: f64 = (0..4).map(|i| net.log_prob_full(&[i / 2, i % 2]).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_entry_gives_log_zero() {
        let net = BayesianNetwork::<f64>::new(
            vec![Variable::with_cardinality("A", 2)],
            vec![CptRows::new(0, vec![], vec![vec![1.0, 0.0]])],
        )
        .unwrap();
        assert_eq!(net.log_prob_full(&[1]), f64::NEG_INFINITY);
        assert!(net.cpt(0).is_deterministic_row(0));
    }

    #[test]
    fn uniform_single_variable() {
        let net = BayesianNetwork::<f64>::new(
            vec![Variable::with_cardinality("A", 2)],
            vec![CptRows::new(0, vec![], vec![vec![0.5, 0.5]])],
        )
        .unwrap();
        for s in 0..2 {
            assert_eq!(net.log_prob_full(&[s]), 0.5f64.ln());
        }
    }

    #[test]
    fn incomplete_assignment_is_rejected() {
        let net = chain();
        let mut a = Assignment::empty(2);
        a.set(0, 1);
        assert!(matches!(net.joint_log_prob(&a), Err(Error::IncompleteAssignment(n)) if n == "B"));
    }

    #[test]
    fn topological_orders() {
        let v = |n: &str| Variable::with_cardinality(n, 2);
        let row2 = || vec![vec![0.5, 0.5]; 2];
        let chain = BayesianNetwork::<f64>::new(
            vec![v("C"), v("B"), v("A")],
            vec![
                CptRows::new(2, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(1, vec![2], row2()),
                CptRows::new(0, vec![1], row2()),
            ],
        )
        .unwrap();
        assert_eq!(chain.topological_order(), vec![2, 1, 0]);

        let indep = BayesianNetwork::<f64>::new(
            vec![v("A"), v("B")],
            vec![CptRows::new(0, vec![], vec![vec![0.5, 0.5]]), CptRows::new(1, vec![], vec![vec![0.5, 0.5]])],
        )
        .unwrap();
        assert_eq!(indep.topological_order(), vec![0, 1]);

        let diamond = BayesianNetwork::<f64>::new(
            vec![v("D"), v("B"), v("C"), v("A")],
            vec![
                CptRows::new(3, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(1, vec![3], row2()),
                CptRows::new(2, vec![3], row2()),
                CptRows::new(0, vec![1, 2], vec![vec![0.5, 0.5]; 4]),
            ],
        )
        .unwrap();
        let order = diamond.topological_order();
        assert_eq!(order.first(), Some(&3));
        assert_eq!(order.last(), Some(&0));
    }

    #[test]
    fn row_config_roundtrip() {
        let net = BayesianNetwork::<f64>::new(
            vec![
                Variable::with_cardinality("A", 2),
                Variable::with_cardinality("B", 3),
                Variable::with_cardinality("C", 2),
            ],
            vec![
                CptRows::new(0, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(1, vec![], vec![vec![0.2, 0.3, 0.5]]),
                CptRows::new(2, vec![0, 1], vec![vec![0.5, 0.5]; 6]),
            ],
        )
        .unwrap();
        let cpt = net.cpt(2);
        for r in 0..6 {
            let cfg = cpt.row_config(r);
            assert_eq!(cpt.row_index(&[cfg[0], cfg[1], 0]), r);
        }
        // first parent most significant
        assert_eq!(cpt.row_index(&[1, 0, 0]), 3);
    }
}
