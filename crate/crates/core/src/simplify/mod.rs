//! Edge deletion and variational fitting of the simplified network.

mod edges;
mod fit;

pub use edges::{del_edges, del_edges_given};
pub use fit::{fit_objective, fit_tables, moment_fit, prior_kl, var_tech_fit, FitMethod, FitOptions, FLOOR};

use serde::Serialize;

use crate::model::{BayesianNetwork, Evidence, NetworkDocument};
use crate::num::Real;

/// A network with some edges removed, whose tables approximate the original
/// prior.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplifiedNetwork<T> {
    base: BayesianNetwork<T>,
    deleted_edges: Vec<(usize, usize)>,
    fitted: bool,
    excluded: Vec<bool>,
    fit_trace: Vec<T>,
}

impl<T: Real> SimplifiedNetwork<T> {
    pub fn new(base: BayesianNetwork<T>, deleted_edges: Vec<(usize, usize)>) -> Self {
        let n = base.num_vars();
        Self { base, deleted_edges, fitted: false, excluded: vec![false; n], fit_trace: Vec::new() }
    }

    /// The simplified network with nothing deleted.
    pub fn identity(net: &BayesianNetwork<T>) -> Self {
        Self::new(net.clone(), Vec::new())
    }

    pub fn base(&self) -> &BayesianNetwork<T> {
        &self.base
    }

    pub fn deleted_edges(&self) -> &[(usize, usize)] {
        &self.deleted_edges
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    /// Objective value before fitting and after every sweep.
    pub fn fit_trace(&self) -> &[T] {
        &self.fit_trace
    }

    pub fn is_excluded(&self, var: usize) -> bool {
        self.excluded[var]
    }

    /// Variables the fit ranges over.
    pub fn kept(&self) -> Vec<usize> {
        (0..self.base.num_vars()).filter(|&v| !self.excluded[v]).collect()
    }

    /// Marks observed variables whose descendants in `net` are all observed
    /// as outside the fit. Summing them out of the prior is exact in both
    /// networks, so the fit targets the prior over the remaining variables.
    pub fn exclude_evidence(mut self, net: &BayesianNetwork<T>, ev: &Evidence) -> Self {
        let mut excluded = vec![false; net.num_vars()];
        for v in net.topological_order().into_iter().rev() {
            excluded[v] = ev.contains(v) && net.children(v).iter().all(|&c| excluded[c]);
        }
        self.excluded = excluded;
        self
    }

    /// Replaces the tables, keeping edges and fit state.
    pub fn with_base(&self, base: BayesianNetwork<T>) -> Self {
        Self { base, ..self.clone() }
    }

    pub(crate) fn set_fitted(&mut self, base: BayesianNetwork<T>, trace: Vec<T>) {
        self.base = base;
        self.fitted = true;
        self.fit_trace = trace;
    }

    /// JSON document: the simplified network in the network format plus a
    /// `deleted_edges` array of `[parent, child]` names.
    pub fn to_document(&self) -> String {
        #[derive(Serialize)]
        struct Doc {
            #[serde(flatten)]
            network: NetworkDocument,
            deleted_edges: Vec<[String; 2]>,
        }
        let doc = Doc {
            network: NetworkDocument::from_network(&self.base, None),
            deleted_edges: self
                .deleted_edges
                .iter()
                .map(|&(u, v)| [self.base.name(u).to_string(), self.base.name(v).to_string()])
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("documents serialize");
        out.push('\n');
        out
    }
}
