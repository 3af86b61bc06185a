//! Importance functions compiled from the simplified network, sampling, and
//! proposal updates.

mod build;
mod update;

pub use build::{build_proposal, reinstated_factor};
pub use update::{anneal_update, direct_transform, Direction};

use rand::Rng;
use serde::Serialize;

use crate::model::{sample_row, BayesianNetwork, Evidence};
use crate::num::{ln_or_zero, Real};

/// `Q_i(x_i | s_i)` for one sampled variable, rows indexed by the context
/// configuration (first context variable most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable<T> {
    var: usize,
    card: usize,
    context: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<T>,
    log_probs: Vec<T>,
}

impl<T: Real> ConditionalTable<T> {
    /// Builds a table from rows that already sum to one.
    pub fn new(var: usize, card: usize, context: Vec<usize>, context_cards: &[usize], probs: Vec<T>) -> Self {
        assert_eq!(context.len(), context_cards.len());
        let mut strides = vec![0; context.len()];
        let mut s = 1;
        for k in (0..context.len()).rev() {
            strides[k] = s;
            s *= context_cards[k];
        }
        assert_eq!(probs.len(), s * card);
        let log_probs = probs.iter().map(|&p| ln_or_zero(p)).collect();
        Self { var, card, context, strides, probs, log_probs }
    }

    pub fn var(&self) -> usize {
        self.var
    }

    pub fn cardinality(&self) -> usize {
        self.card
    }

    pub fn context(&self) -> &[usize] {
        &self.context
    }

    pub fn num_rows(&self) -> usize {
        self.probs.len() / self.card
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn row_index(&self, full: &[usize]) -> usize {
        self.context.iter().zip(&self.strides).map(|(&v, &s)| full[v] * s).sum()
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.probs[row * self.card..(row + 1) * self.card]
    }

    #[inline]
    pub fn log_prob(&self, row: usize, state: usize) -> T {
        self.log_probs[row * self.card + state]
    }

    pub(crate) fn with_probs(&self, probs: Vec<T>) -> Self {
        let log_probs = probs.iter().map(|&p| ln_or_zero(p)).collect();
        Self { probs, log_probs, ..self.clone() }
    }
}

/// Importance function `Q(h) = Π_i Q_i(x_i | s_i)` with its sampling order.
/// Observed variables are fixed and have no table.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalDistribution<T> {
    order: Vec<usize>,
    tables: Vec<Option<ConditionalTable<T>>>,
    evidence: Evidence,
    num_vars: usize,
}

/// One draw from a proposal.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord<T> {
    /// Full instance, observed variables at their evidence values.
    pub assignment: Vec<usize>,
    pub log_q: T,
    pub log_p: T,
    /// `log_p − log_q`; `-inf` when the instance is infeasible.
    pub log_ratio: T,
}

impl<T: Real> ProposalDistribution<T> {
    pub(crate) fn from_parts(
        num_vars: usize,
        order: Vec<usize>,
        tables: Vec<Option<ConditionalTable<T>>>,
        evidence: Evidence,
    ) -> Self {
        debug_assert!(order.iter().all(|&v| tables[v].is_some()));
        Self { order, tables, evidence, num_vars }
    }

    /// The prior: each hidden variable drawn from its own CPT in topological
    /// order, as likelihood weighting does.
    pub fn prior(net: &BayesianNetwork<T>, ev: &Evidence) -> Self {
        let n = net.num_vars();
        let order: Vec<usize> = net.topological_order().into_iter().filter(|&v| !ev.contains(v)).collect();
        let mut tables = vec![None; n];
        for &v in &order {
            let cpt = net.cpt(v);
            let cards: Vec<usize> = cpt.parents().iter().map(|&p| net.card(p)).collect();
            tables[v] =
                Some(ConditionalTable::new(v, net.card(v), cpt.parents().to_vec(), &cards, cpt.table().to_vec()));
        }
        Self::from_parts(n, order, tables, ev.clone())
    }

    /// Sampling order over the unobserved variables.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn table(&self, var: usize) -> Option<&ConditionalTable<T>> {
        self.tables[var].as_ref()
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// `ln Q(h)` for the hidden part of a full instance.
    pub fn log_prob(&self, full: &[usize]) -> T {
        let mut acc = T::zero();
        for &v in &self.order {
            let t = self.tables[v].as_ref().expect("sampled variable has a table");
            let lq = t.log_prob(t.row_index(full), full[v]);
            if lq == T::neg_infinity() {
                return lq;
            }
            acc = acc + lq;
        }
        acc
    }

    /// Draws one instance by inverse-CDF sampling along the order.
    pub fn draw_sample<R: Rng + ?Sized>(&self, net: &BayesianNetwork<T>, rng: &mut R) -> SampleRecord<T> {
        let mut full = vec![0usize; self.num_vars];
        for (v, s) in self.evidence.iter() {
            full[v] = s;
        }
        let mut log_q = T::zero();
        for &v in &self.order {
            let t = self.tables[v].as_ref().expect("sampled variable has a table");
            let row = t.row_index(&full);
            let x = sample_row(t.row(row), T::lit(rng.gen::<f64>()));
            full[v] = x;
            log_q = log_q + t.log_prob(row, x);
        }
        let log_p = net.log_prob_full(&full);
        let log_ratio = if log_p == T::neg_infinity() { log_p } else { log_p - log_q };
        SampleRecord { assignment: full, log_q, log_p, log_ratio }
    }

    pub(crate) fn tables_mut(&mut self) -> &mut [Option<ConditionalTable<T>>] {
        &mut self.tables
    }

    /// JSON dump of every table, one row per context configuration.
    pub fn to_document(&self, net: &BayesianNetwork<T>) -> String {
        #[derive(Serialize)]
        struct TableDoc {
            variable: String,
            context: Vec<String>,
            table: Vec<Vec<f64>>,
        }
        #[derive(Serialize)]
        struct Doc {
            order: Vec<String>,
            tables: Vec<TableDoc>,
            evidence: std::collections::BTreeMap<String, String>,
        }
        let doc = Doc {
            order: self.order.iter().map(|&v| net.name(v).to_string()).collect(),
            tables: self
                .order
                .iter()
                .map(|&v| {
                    let t = self.tables[v].as_ref().unwrap();
                    TableDoc {
                        variable: net.name(v).to_string(),
                        context: t.context.iter().map(|&c| net.name(c).to_string()).collect(),
                        table: t.probs.chunks(t.card).map(|r| r.iter().map(|p| p.as_f64()).collect()).collect(),
                    }
                })
                .collect(),
            evidence: self.evidence.to_labels(net),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("documents serialize");
        out.push('\n');
        out
    }
}
