use crate::exact::{clamped_scopes, InteractionGraph};
use crate::model::{BayesianNetwork, CptRows, Evidence};
use crate::num::Real;
use crate::simplify::SimplifiedNetwork;

/// Rows of a CPT with the parent at position `k` averaged out uniformly.
pub(crate) fn average_out_parent<T: Real>(rows: &[Vec<T>], parent_cards: &[usize], k: usize) -> Vec<Vec<T>> {
    let card_u = parent_cards[k];
    let inner: usize = parent_cards[k + 1..].iter().product();
    let outer: usize = parent_cards[..k].iter().product();
    let child_card = rows.first().map_or(0, Vec::len);
    let scale = T::one() / T::from_count(card_u);
    let mut out = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let mut row = vec![T::zero(); child_card];
            for u in 0..card_u {
                let src = &rows[(o * card_u + u) * inner + i];
                for (acc, &p) in row.iter_mut().zip(src) {
                    *acc = *acc + p;
                }
            }
            row.iter_mut().for_each(|p| *p = *p * scale);
            out.push(row);
        }
    }
    out
}

/// Mutual information between the parent at position `k` and the child when
/// every parent configuration is weighted uniformly.
pub(crate) fn edge_mutual_information<T: Real>(rows: &[Vec<T>], parent_cards: &[usize], k: usize) -> f64 {
    let card_u = parent_cards[k];
    let inner: usize = parent_cards[k + 1..].iter().product();
    let child_card = rows.first().map_or(0, Vec::len);
    let total_rows = rows.len() as f64;
    let mut joint = vec![vec![0.0f64; child_card]; card_u];
    for (r, row) in rows.iter().enumerate() {
        let u = (r / inner) % card_u;
        for (x, &p) in row.iter().enumerate() {
            joint[u][x] += p.as_f64() / total_rows;
        }
    }
    let pv: Vec<f64> = (0..child_card).map(|x| joint.iter().map(|j| j[x]).sum()).collect();
    let pu = 1.0 / card_u as f64;
    let mut mi = 0.0;
    for ju in &joint {
        for (x, &p) in ju.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (pu * pv[x])).ln();
            }
        }
    }
    mi.max(0.0)
}

fn width_of(num_vars: usize, scopes: &[Vec<usize>], hidden: &[usize]) -> usize {
    let (_, clusters) = InteractionGraph::from_scopes(num_vars, scopes).min_fill(hidden);
    clusters.into_iter().max().unwrap_or(1).saturating_sub(1)
}

/// Deletes edges greedily until the min-fill width of the result is at most
/// `width_bound`.
///
/// Each step removes the edge whose deletion gives the smallest width,
/// breaking ties by the lowest mutual information between parent and child,
/// then by declaration order. The child's table is averaged uniformly over
/// the removed parent.
pub fn del_edges<T: Real>(net: &BayesianNetwork<T>, width_bound: usize) -> SimplifiedNetwork<T> {
    del_edges_given(net, &Evidence::new(), width_bound)
}

/// [`del_edges`] with the width measured on the graph left after clamping
/// `ev`. Edges out of observed variables vanish from that graph and are
/// never deleted.
pub fn del_edges_given<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence, width_bound: usize) -> SimplifiedNetwork<T> {
    let n = net.num_vars();
    let hidden = ev.hidden(n);
    let mut cpts = net.to_rows();
    let mut scopes = clamped_scopes(net, ev);
    let mut deleted = Vec::new();
    let mut width = width_of(n, &scopes, &hidden);
    while width > width_bound {
        let mut best: Option<(usize, f64, usize, usize)> = None;
        for v in 0..n {
            for (k, &u) in cpts[v].parents.iter().enumerate() {
                if ev.contains(u) {
                    continue;
                }
                let mut trial = scopes.clone();
                trial[v].retain(|&x| x != u);
                let w = width_of(n, &trial, &hidden);
                let cards: Vec<usize> = cpts[v].parents.iter().map(|&p| net.card(p)).collect();
                let mi = edge_mutual_information(&cpts[v].rows, &cards, k);
                let better = match best {
                    None => true,
                    Some((bw, bmi, _, _)) => w < bw || (w == bw && mi < bmi),
                };
                if better {
                    best = Some((w, mi, v, k));
                }
            }
        }
        let (w, _, v, k) = best.expect("width above bound implies a hidden edge exists");
        let cards: Vec<usize> = cpts[v].parents.iter().map(|&p| net.card(p)).collect();
        let rows = average_out_parent(&cpts[v].rows, &cards, k);
        let u = cpts[v].parents.remove(k);
        cpts[v].rows = rows;
        scopes[v].retain(|&x| x != u);
        deleted.push((u, v));
        width = w;
    }
    let base = if deleted.is_empty() {
        net.clone()
    } else {
        net.with_cpts(cpts.into_iter().map(|c| CptRows::new(c.child, c.parents, c.rows)).collect())
            .expect("averaged tables stay valid")
    };
    SimplifiedNetwork::new(base, deleted)
}
