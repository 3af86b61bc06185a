use crate::error::Result;
use crate::exact::{bucket_eliminate, min_fill_order_given, Factor};
use crate::model::{BayesianNetwork, Evidence};
use crate::num::{LogSumExp, Real};
use crate::proposal::{ConditionalTable, ProposalDistribution};
use crate::simplify::SimplifiedNetwork;

/// `f(u_1, …, u_k, v) = Σ P(v | pa(v))`, summed over the parents of `v`
/// other than `us`.
pub fn reinstated_factor<T: Real>(net: &BayesianNetwork<T>, v: usize, us: &[usize]) -> Factor<T> {
    let cpt = net.cpt(v);
    let card = net.card(v);
    let mut scope = us.to_vec();
    scope.push(v);
    let cards: Vec<usize> = scope.iter().map(|&x| net.card(x)).collect();
    let positions: Vec<usize> =
        us.iter().map(|u| cpt.parents().iter().position(|p| p == u).expect("u is a parent of v")).collect();
    let mut linear = vec![T::zero(); cards.iter().product()];
    for r in 0..cpt.num_rows() {
        let config = cpt.row_config(r);
        let base = positions.iter().zip(&cards).fold(0, |acc, (&k, &c)| acc * c + config[k]);
        for (x, &p) in cpt.row(r).iter().enumerate() {
            linear[base * card + x] = linear[base * card + x] + p;
        }
    }
    Factor::new(scope, cards, linear.into_iter().map(crate::num::ln_or_zero).collect())
}

/// Normalizes each row of a factor whose last scope variable is the child.
/// Rows with no mass take the matching row of `fallback`, or the uniform row
/// when no fallback is given.
fn normalize_rows<T: Real>(f: &Factor<T>, fallback: Option<&Factor<T>>) -> Vec<T> {
    let card = *f.cards().last().unwrap();
    let mut out = Vec::with_capacity(f.len());
    for (r, block) in f.log_values().chunks(card).enumerate() {
        let mut z = LogSumExp::new();
        block.iter().for_each(|&v| z.push(v));
        if z.is_zero() {
            match fallback {
                Some(fb) => out.extend(fb.log_values()[r * card..(r + 1) * card].iter().map(|v| v.exp())),
                None => out.extend(std::iter::repeat_n(T::one() / T::from_count(card), card)),
            }
            continue;
        }
        let z = z.ln();
        out.extend(block.iter().map(|&v| if v == T::neg_infinity() { T::zero() } else { (v - z).exp() }));
    }
    out
}

/// `f` with every observed variable fixed to its value and dropped from the
/// scope.
fn restrict<T: Real>(mut f: Factor<T>, ev: &Evidence) -> Factor<T> {
    for v in f.scope().to_vec() {
        if let Some(s) = ev.get(v) {
            f.clamp(v, s);
            f = f.sum_out(v);
        }
    }
    f
}

/// Compiles the importance function from the simplified network.
///
/// Bucket elimination runs on the simplified network with the evidence
/// clamped, along [`min_fill_order_given`]. Each hidden variable gets
/// `Q_i(x_i | s_i) = λ_i(x_i, s_i) / λ_i(s_i)` from its bucket, and the
/// sampling order is the elimination order reversed.
///
/// Deleted edges are then reinstated. A hidden `V` that lost parents sampled
/// before it (observed parents always count as sampled) has `Q_V`
/// multiplied by [`reinstated_factor`] over those parents. An observed `V`
/// that lost a parent contributes its full table `P(e_v | pa(V))` as a
/// factor on whichever hidden parent is sampled last.
/// Affected tables are renormalized per context.
pub fn build_proposal<T: Real>(
    net: &BayesianNetwork<T>,
    simp: &SimplifiedNetwork<T>,
    ev: &Evidence,
    table_cap: usize,
) -> Result<ProposalDistribution<T>> {
    let base = simp.base();
    let ord = min_fill_order_given(base, ev);
    let (_, scheme) = bucket_eliminate(base, ev, &ord, table_cap)?;
    let n = net.num_vars();
    let order: Vec<usize> = ord.reversed().into_iter().filter(|&v| !ev.contains(v)).collect();
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i + 1;
    }

    let mut extras: Vec<Vec<Factor<T>>> = vec![Vec::new(); n];
    for v in 0..n {
        let mut lost: Vec<usize> = Vec::new();
        for &(u, w) in simp.deleted_edges() {
            if w == v && !lost.contains(&u) {
                lost.push(u);
            }
        }
        if ev.contains(v) {
            if lost.is_empty() {
                continue;
            }
            let parents = net.parents(v).to_vec();
            if let Some(&last) = parents.iter().filter(|&&u| !ev.contains(u)).max_by_key(|&&u| rank[u]) {
                let f = restrict(reinstated_factor(net, v, &parents), ev);
                extras[last].push(f);
            }
        } else {
            let us: Vec<usize> = lost.into_iter().filter(|&u| rank[u] < rank[v]).collect();
            if !us.is_empty() {
                extras[v].push(restrict(reinstated_factor(net, v, &us), ev));
            }
        }
    }

    let mut tables = vec![None; n];
    for &v in &order {
        let bucket = scheme.bucket(v);
        let context = bucket.separator().to_vec();
        let mut scope = context.clone();
        scope.push(v);
        let joint = bucket.joint.permuted(&scope);
        let q = Factor::new(
            scope.clone(),
            joint.cards().to_vec(),
            normalize_rows(&joint, None).into_iter().map(crate::num::ln_or_zero).collect(),
        );

        let (context, probs) = if extras[v].is_empty() {
            (context, q.linear_values())
        } else {
            let mut new_context = context.clone();
            for f in &extras[v] {
                for &u in f.scope() {
                    if u != v && !new_context.contains(&u) {
                        new_context.push(u);
                    }
                }
            }
            let mut new_scope = new_context.clone();
            new_scope.push(v);
            let added: Vec<usize> = new_context[context.len()..].to_vec();
            let added_cards = added.iter().map(|&u| net.card(u)).collect();
            let fallback = q.product(&Factor::ones(added, added_cards), table_cap)?.permuted(&new_scope);
            let mut product = q;
            for f in &extras[v] {
                product = product.product(f, table_cap)?;
            }
            (new_context, normalize_rows(&product.permuted(&new_scope), Some(&fallback)))
        };
        let cards: Vec<usize> = context.iter().map(|&c| net.card(c)).collect();
        tables[v] = Some(ConditionalTable::new(v, net.card(v), context, &cards, probs));
    }
    Ok(ProposalDistribution::from_parts(n, order, tables, ev.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CptRows, Variable};

    #[test]
    fn reinstated_factor_sums_other_parents() {
        // pa(V) = (U, W), P(V=1 | u, w)
        let p1 = [0.1, 0.3, 0.6, 0.9];
        let net = BayesianNetwork::<f64>::new(
            vec![
                Variable::with_cardinality("U", 2),
                Variable::with_cardinality("W", 2),
                Variable::with_cardinality("V", 2),
            ],
            vec![
                CptRows::new(0, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(1, vec![], vec![vec![0.5, 0.5]]),
                CptRows::new(2, vec![0, 1], p1.iter().map(|&p| vec![1.0 - p, p]).collect()),
            ],
        )
        .unwrap();
        let f = reinstated_factor(&net, 2, &[0]);
        let at = |u: usize, v: usize| f.log_value_local(&[u, v]).exp();
        assert!((at(0, 1) - 0.4).abs() < 1e-12);
        assert!((at(1, 1) - 1.5).abs() < 1e-12);
        assert!((at(0, 0) - 1.6).abs() < 1e-12);
        assert!((at(1, 0) - 0.5).abs() < 1e-12);
    }
}
