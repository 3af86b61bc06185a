use std::collections::BTreeSet;

use crate::model::{BayesianNetwork, Evidence};
use crate::num::Real;

/// A variable elimination order with the cluster size produced at each step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder {
    order: Vec<usize>,
    cluster_sizes: Vec<usize>,
}

impl EliminationOrder {
    /// Builds an order and computes its clusters on the interaction graph
    /// given by `scopes`.
    pub fn from_order(num_vars: usize, scopes: &[Vec<usize>], order: Vec<usize>) -> Self {
        let mut graph = InteractionGraph::from_scopes(num_vars, scopes);
        let cluster_sizes = order.iter().map(|&v| graph.eliminate(v)).collect();
        Self { order, cluster_sizes }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    /// Largest cluster minus one; zero for an empty order.
    pub fn width(&self) -> usize {
        self.cluster_sizes.iter().copied().max().unwrap_or(1).saturating_sub(1)
    }

    /// Sampling order: the elimination order reversed.
    pub fn reversed(&self) -> Vec<usize> {
        self.order.iter().rev().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True when the order is a permutation of `0..num_vars`.
    pub fn is_permutation_of(&self, num_vars: usize) -> bool {
        let mut seen = vec![false; num_vars];
        self.order.len() == num_vars
            && self.order.iter().all(|&v| v < num_vars && !std::mem::replace(&mut seen[v], true))
    }
}

/// Undirected graph whose cliques cover a set of factor scopes.
#[derive(Clone, Debug)]
pub(crate) struct InteractionGraph {
    adj: Vec<BTreeSet<usize>>,
    alive: Vec<bool>,
}

impl InteractionGraph {
    pub(crate) fn from_scopes(num_vars: usize, scopes: &[Vec<usize>]) -> Self {
        let mut adj = vec![BTreeSet::new(); num_vars];
        for scope in scopes {
            for (i, &a) in scope.iter().enumerate() {
                for &b in &scope[i + 1..] {
                    if a != b {
                        adj[a].insert(b);
                        adj[b].insert(a);
                    }
                }
            }
        }
        Self { adj, alive: vec![true; num_vars] }
    }

    fn fill_count(&self, v: usize) -> usize {
        let nb: Vec<usize> = self.adj[v].iter().copied().collect();
        let mut fill = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !self.adj[a].contains(&b) {
                    fill += 1;
                }
            }
        }
        fill
    }

    /// Removes `v`, connecting its neighbours. Returns the cluster size.
    pub(crate) fn eliminate(&mut self, v: usize) -> usize {
        let nb: Vec<usize> = std::mem::take(&mut self.adj[v]).into_iter().collect();
        for &a in &nb {
            self.adj[a].remove(&v);
        }
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                self.adj[a].insert(b);
                self.adj[b].insert(a);
            }
        }
        self.alive[v] = false;
        nb.len() + 1
    }

    /// Greedy min-fill over `candidates`; ties broken by degree, then index.
    pub(crate) fn min_fill(mut self, candidates: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut remaining: BTreeSet<usize> = candidates.iter().copied().collect();
        let mut order = Vec::with_capacity(remaining.len());
        let mut clusters = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let best = *remaining.iter().min_by_key(|&&v| (self.fill_count(v), self.adj[v].len(), v)).unwrap();
            remaining.remove(&best);
            clusters.push(self.eliminate(best));
            order.push(best);
        }
        (order, clusters)
    }
}

/// Scopes of every CPT family; their union graph is the moral graph.
pub(crate) fn family_scopes<T: Real>(net: &BayesianNetwork<T>) -> Vec<Vec<usize>> {
    (0..net.num_vars())
        .map(|v| {
            let mut s = net.parents(v).to_vec();
            s.push(v);
            s
        })
        .collect()
}

/// Family scopes with the observed variables removed: the interaction graph
/// left once the evidence is clamped.
pub(crate) fn clamped_scopes<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence) -> Vec<Vec<usize>> {
    family_scopes(net).into_iter().map(|s| s.into_iter().filter(|&v| !ev.contains(v)).collect()).collect()
}

/// Elimination order for inference with `ev` clamped: the observed
/// variables first, in index order, then greedy min-fill over the hidden
/// ones on the clamped graph.
pub fn min_fill_order_given<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence) -> EliminationOrder {
    let n = net.num_vars();
    let scopes = clamped_scopes(net, ev);
    let hidden = ev.hidden(n);
    let (rest, _) = InteractionGraph::from_scopes(n, &scopes).min_fill(&hidden);
    let order: Vec<usize> = ev.iter().map(|(v, _)| v).chain(rest).collect();
    EliminationOrder::from_order(n, &scopes, order)
}

/// Induced width of `net` with `ev` clamped, under [`min_fill_order_given`].
pub fn min_fill_width_given<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence) -> usize {
    min_fill_order_given(net, ev).width()
}

/// Greedy min-fill elimination order over the moral graph, ties broken by
/// (fill, degree, declaration index).
pub fn min_fill_order<T: Real>(net: &BayesianNetwork<T>) -> EliminationOrder {
    let n = net.num_vars();
    let graph = InteractionGraph::from_scopes(n, &family_scopes(net));
    let all: Vec<usize> = (0..n).collect();
    let (order, cluster_sizes) = graph.min_fill(&all);
    EliminationOrder { order, cluster_sizes }
}

/// Induced width of `net` under its min-fill order.
pub fn min_fill_width<T: Real>(net: &BayesianNetwork<T>) -> usize {
    min_fill_order(net).width()
}
