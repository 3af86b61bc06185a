use serde::Serialize;

use crate::error::Result;
use crate::exact::{for_each_instance, variable_elimination, Factor, DEFAULT_TABLE_CAP};
use crate::model::{BayesianNetwork, CptRows, Evidence};
use crate::num::{LogSumExp, Real};
use crate::simplify::SimplifiedNetwork;

/// Lower bound applied to fitted entries that are not structural zeros.
pub const FLOOR: f64 = 1e-6;

/// Stopping rule and memory cap of the variational fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub sweeps: usize,
    pub tol: f64,
    pub table_cap: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { sweeps: 20, tol: 1e-6, table_cap: DEFAULT_TABLE_CAP }
    }
}

struct FitContext<'a, T> {
    net: &'a BayesianNetwork<T>,
    kept: Vec<usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    cap: usize,
}

fn family<T: Real>(net: &BayesianNetwork<T>, v: usize) -> Vec<usize> {
    let mut s = net.parents(v).to_vec();
    s.push(v);
    s
}

fn decode(mut idx: usize, scope: &[usize], cards: &[usize], full: &mut [usize]) {
    for k in (0..scope.len()).rev() {
        full[scope[k]] = idx % cards[k];
        idx /= cards[k];
    }
}

impl<'a, T: Real> FitContext<'a, T> {
    fn new(net: &'a BayesianNetwork<T>, simp: &SimplifiedNetwork<T>, cap: usize) -> Self {
        let base = simp.base();
        let n = base.num_vars();
        Self {
            net,
            kept: simp.kept(),
            parents: (0..n).map(|v| base.parents(v).to_vec()).collect(),
            children: (0..n).map(|v| base.children(v).to_vec()).collect(),
            cap,
        }
    }

    /// `ln P(x_j | pa_j)` in the original network, with zeros replaced by the
    /// smallest representable log value.
    fn clipped_log_p(&self, j: usize, full: &[usize]) -> T {
        let cpt = self.net.cpt(j);
        cpt.log_prob(cpt.row_index(full), full[j]).max(T::log_tiny())
    }

    fn ancestral(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.parents.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut mark[v], true) {
                stack.extend(self.parents[v].iter().copied());
            }
        }
        mark
    }

    fn descendants(&self, v: usize) -> Vec<bool> {
        let mut mark = vec![false; self.children.len()];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if !std::mem::replace(&mut mark[u], true) {
                stack.extend(self.children[u].iter().copied());
            }
        }
        mark
    }

    /// Marginal of the simplified prior over `scope`, laid out in `scope`
    /// order. With `unit = Some(i)`, the table of `i` is replaced by ones.
    fn marginal(&self, cpts: &[Factor<T>], scope: &[usize], unit: Option<usize>) -> Result<Factor<T>> {
        let anc = self.ancestral(scope);
        let factors = self
            .kept
            .iter()
            .filter(|&&j| anc[j])
            .map(|&j| {
                if unit == Some(j) {
                    Factor::ones(cpts[j].scope().to_vec(), cpts[j].cards().to_vec())
                } else {
                    cpts[j].clone()
                }
            })
            .collect();
        let m = variable_elimination(self.parents.len(), factors, scope, self.cap)?;
        Ok(m.permuted(scope))
    }

    /// `Σ_j E_{P′}[ln P′_j − ln P_j]` over the kept variables, with clipped
    /// zeros in `P`.
    fn objective(&self, cpts: &[Factor<T>]) -> Result<T> {
        let mut full = vec![0usize; self.parents.len()];
        let mut total = T::zero();
        for &j in &self.kept {
            let scope = family(self.net, j);
            let m = self.marginal(cpts, &scope, None)?;
            for (idx, &lv) in m.log_values().iter().enumerate() {
                if lv == T::neg_infinity() {
                    continue;
                }
                decode(idx, &scope, m.cards(), &mut full);
                let lq = cpts[j].log_value_at(&full);
                total = total + lv.exp() * (lq - self.clipped_log_p(j, &full));
            }
        }
        Ok(total)
    }

    /// Coordinate update of the table of `i`.
    fn update(&self, cpts: &[Factor<T>], i: usize) -> Result<Factor<T>> {
        let own = cpts[i].scope().to_vec();
        let own_cards = cpts[i].cards().to_vec();
        let card = *own_cards.last().unwrap();
        let len_i = cpts[i].len();
        let desc = self.descendants(i);
        let mut g = vec![T::zero(); len_i];
        let mut reachable = vec![true; len_i / card];
        let mut full = vec![0usize; self.parents.len()];

        for &j in &self.kept {
            let fam = family(self.net, j);
            if !fam.iter().any(|&v| desc[v]) {
                continue;
            }
            let mut scope = own.clone();
            scope.extend(fam.iter().copied().filter(|v| !own.contains(v)));
            let m = self.marginal(cpts, &scope, Some(i))?;
            let rest = m.len() / len_i;
            for b in 0..len_i {
                let block = &m.log_values()[b * rest..(b + 1) * rest];
                let mut z = LogSumExp::new();
                block.iter().for_each(|&v| z.push(v));
                if z.is_zero() {
                    reachable[b / card] = false;
                    continue;
                }
                let z = z.ln();
                for (r, &lv) in block.iter().enumerate() {
                    if lv == T::neg_infinity() {
                        continue;
                    }
                    decode(b * rest + r, &scope, m.cards(), &mut full);
                    let mut term = self.clipped_log_p(j, &full);
                    if j != i {
                        term = term - cpts[j].log_value_at(&full);
                    }
                    g[b] = g[b] + (lv - z).exp() * term;
                }
            }
        }

        let same_parents = self.net.parents(i) == &own[..own.len() - 1];
        let p_i = self.net.cpt(i);
        let floor = T::lit(FLOOR);
        let mut values = Vec::with_capacity(len_i);
        for (c, &ok) in reachable.iter().enumerate() {
            let old = &cpts[i].log_values()[c * card..(c + 1) * card];
            if !ok {
                values.extend_from_slice(old);
                continue;
            }
            let gs = &g[c * card..(c + 1) * card];
            let max = gs.iter().copied().fold(T::neg_infinity(), T::max);
            let mut row: Vec<T> =
                gs.iter()
                    .enumerate()
                    .map(|(x, &gx)| {
                        if same_parents && p_i.prob(c, x) == T::zero() {
                            T::zero()
                        } else {
                            (gx - max).exp().max(floor)
                        }
                    })
                    .collect();
            let sum: T = row.iter().copied().sum();
            row.iter_mut().for_each(|p| *p = *p / sum);
            values.extend(row.into_iter().map(crate::num::ln_or_zero));
        }
        Ok(Factor::new(own, own_cards, values))
    }
}

fn factors_of<T: Real>(base: &BayesianNetwork<T>) -> Vec<Factor<T>> {
    (0..base.num_vars()).map(|v| Factor::from_cpt(base, v)).collect()
}

/// Fits the tables of the simplified network to the original prior by
/// coordinate descent on `D(P′ ∥ P)` over the kept variables.
///
/// The table of variable `i` is set, context by context, to
/// `∝ exp E[Σ_j ln P_j − Σ_{j≠i} ln P′_j | x_i, pa′_i]`, with expectations
/// under the current simplified prior. Zeros of `P` enter as the smallest
/// finite log value, except that the zeros of `P_i` are kept exactly when
/// `i` lost no parent. All other entries are floored at [`FLOOR`]. An
/// update that raises the objective is discarded.
pub fn var_tech_fit<T: Real>(
    net: &BayesianNetwork<T>,
    simp: &SimplifiedNetwork<T>,
    opts: &FitOptions,
) -> Result<SimplifiedNetwork<T>> {
    let mut out = simp.clone();
    if simp.deleted_edges().is_empty() {
        out.set_fitted(simp.base().clone(), Vec::new());
        return Ok(out);
    }
    let ctx = FitContext::new(net, simp, opts.table_cap);
    let mut cpts = factors_of(simp.base());
    let mut current = ctx.objective(&cpts)?;
    let mut trace = vec![current];
    for _ in 0..opts.sweeps {
        let start = current;
        for &i in &ctx.kept {
            let candidate = ctx.update(&cpts, i)?;
            let previous = std::mem::replace(&mut cpts[i], candidate);
            let value = ctx.objective(&cpts)?;
            if value <= current {
                current = value;
            } else {
                cpts[i] = previous;
            }
        }
        trace.push(current);
        if (start - current).as_f64() < opts.tol {
            break;
        }
    }
    let rows = (0..net.num_vars())
        .map(|v| {
            let f = &cpts[v];
            let card = net.card(v);
            let lin = f.linear_values();
            CptRows::new(v, simp.base().parents(v).to_vec(), lin.chunks(card).map(<[T]>::to_vec).collect())
        })
        .collect();
    let base = simp.base().with_cpts(rows)?;
    out.set_fitted(base, trace);
    Ok(out)
}

/// Objective of the table fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    /// Moment matching, minimizing `D(P ∥ P′)`; see [`moment_fit`].
    #[default]
    Moment,
    /// Coordinate descent on `D(P′ ∥ P)`; see [`var_tech_fit`].
    Exclusive,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::Moment => "moment",
            FitMethod::Exclusive => "exclusive",
        }
    }
}

/// Runs the fit selected by `method`.
pub fn fit_tables<T: Real>(
    net: &BayesianNetwork<T>,
    simp: &SimplifiedNetwork<T>,
    method: FitMethod,
    opts: &FitOptions,
) -> Result<SimplifiedNetwork<T>> {
    match method {
        FitMethod::Moment => moment_fit(net, simp, opts.table_cap),
        FitMethod::Exclusive => var_tech_fit(net, simp, opts),
    }
}

/// Sets each table that lost parents to the conditional of the original
/// prior given the remaining ones,
/// `P′(x | pa′) = Σ_d P(d | pa′) P(x | pa′, d)`.
///
/// This is the projection minimizing `D(P ∥ P′)` over the simplified
/// structure. Contexts with zero prior mass, and variables whose parent
/// marginal exceeds `table_cap`, keep their current rows.
pub fn moment_fit<T: Real>(
    net: &BayesianNetwork<T>,
    simp: &SimplifiedNetwork<T>,
    table_cap: usize,
) -> Result<SimplifiedNetwork<T>> {
    let base = simp.base();
    let n = net.num_vars();
    let mut rows: Vec<CptRows<T>> = Vec::with_capacity(n);
    let mut full = vec![0usize; n];
    for v in 0..n {
        let kept = base.cpt(v);
        let all = net.parents(v);
        let current: Vec<Vec<T>> = (0..kept.num_rows()).map(|r| kept.row(r).to_vec()).collect();
        if kept.parents().len() == all.len() {
            rows.push(CptRows::new(v, kept.parents().to_vec(), current));
            continue;
        }
        let mut anc = vec![false; n];
        let mut stack = all.to_vec();
        while let Some(u) = stack.pop() {
            if !std::mem::replace(&mut anc[u], true) {
                stack.extend(net.parents(u).iter().copied());
            }
        }
        let factors = (0..n).filter(|&u| anc[u]).map(|u| Factor::from_cpt(net, u)).collect();
        let joint = match variable_elimination(n, factors, all, table_cap) {
            Ok(f) => f.permuted(all),
            Err(crate::error::Error::CapExceeded { .. }) => {
                rows.push(CptRows::new(v, kept.parents().to_vec(), current));
                continue;
            }
            Err(e) => return Err(e),
        };
        let p = net.cpt(v);
        let card = net.card(v);
        let mut acc = vec![vec![T::zero(); card]; kept.num_rows()];
        let mut mass = vec![T::zero(); kept.num_rows()];
        for (r, &lw) in joint.log_values().iter().enumerate() {
            if lw == T::neg_infinity() {
                continue;
            }
            decode(r, all, joint.cards(), &mut full);
            let w = lw.exp();
            let (k, row) = (kept.row_index(&full), p.row_index(&full));
            mass[k] = mass[k] + w;
            for (x, a) in acc[k].iter_mut().enumerate() {
                *a = *a + w * p.prob(row, x);
            }
        }
        let fitted = acc
            .into_iter()
            .zip(mass)
            .zip(current)
            .map(|((a, m), old)| if m > T::zero() { a.into_iter().map(|x| x / m).collect() } else { old })
            .collect();
        rows.push(CptRows::new(v, kept.parents().to_vec(), fitted));
    }
    let mut out = simp.clone();
    out.set_fitted(base.with_cpts(rows)?, Vec::new());
    Ok(out)
}

/// The penalized objective minimized by [`var_tech_fit`].
pub fn fit_objective<T: Real>(net: &BayesianNetwork<T>, simp: &SimplifiedNetwork<T>, table_cap: usize) -> Result<T> {
    FitContext::new(net, simp, table_cap).objective(&factors_of(simp.base()))
}

/// Exact `D(P′ ∥ P)` between the priors over the kept variables, by
/// enumeration. `+inf` when `P′` has mass where `P` has none.
pub fn prior_kl<T: Real>(net: &BayesianNetwork<T>, simp: &SimplifiedNetwork<T>, cap: usize) -> Result<T> {
    let kept = simp.kept();
    let fixed = Evidence::from_pairs((0..net.num_vars()).filter(|&v| simp.is_excluded(v)).map(|v| (v, 0)));
    let base = simp.base();
    let mut acc = T::zero();
    let mut infinite = false;
    for_each_instance(net, &fixed, cap, |full| {
        let mut lq = T::zero();
        let mut lp = T::zero();
        for &j in &kept {
            let cq = base.cpt(j);
            lq = lq + cq.log_prob(cq.row_index(full), full[j]);
            let cp = net.cpt(j);
            lp = lp + cp.log_prob(cp.row_index(full), full[j]);
        }
        if lq == T::neg_infinity() {
            return;
        }
        if lp == T::neg_infinity() {
            infinite = true;
            return;
        }
        acc = acc + lq.exp() * (lq - lp);
    })?;
    Ok(if infinite { T::infinity() } else { acc.max(T::zero()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;
    use crate::simplify::del_edges;

    fn chain(rows: Vec<Vec<f64>>) -> BayesianNetwork<f64> {
        BayesianNetwork::new(
            vec![Variable::with_cardinality("A", 2), Variable::with_cardinality("B", 2)],
            vec![CptRows::new(0, vec![], vec![vec![0.5, 0.5]]), CptRows::new(1, vec![0], rows)],
        )
        .unwrap()
    }

    #[test]
    fn identity_when_nothing_deleted() {
        let net = chain(vec![vec![0.8, 0.2], vec![0.2, 0.8]]);
        let s = var_tech_fit(&net, &del_edges(&net, 1), &FitOptions::default()).unwrap();
        assert!(s.is_fitted());
        assert_eq!(s.base(), &net);
        assert_eq!(prior_kl(&net, &s, 1 << 10).unwrap(), 0.0);
    }

    #[test]
    fn equal_rows_fit_exactly() {
        let net = chain(vec![vec![0.3, 0.7], vec![0.3, 0.7]]);
        let s = var_tech_fit(&net, &del_edges(&net, 0), &FitOptions::default()).unwrap();
        assert!((s.base().cpt(1).prob(0, 1) - 0.7).abs() < 1e-9);
        assert!(prior_kl(&net, &s, 1 << 10).unwrap() < 1e-9);
    }

    #[test]
    fn geometric_mean_fixed_point() {
        let net = chain(vec![vec![0.8, 0.2], vec![0.2, 0.8]]);
        let s = var_tech_fit(&net, &del_edges(&net, 0), &FitOptions::default()).unwrap();
        assert!((s.base().cpt(1).prob(0, 1) - 0.5).abs() < 1e-9);
        // grid search oracle over P′(B=1)
        let kl = |q: f64| {
            let mut acc = 0.0;
            for (a, pb) in [(0.5, 0.2), (0.5, 0.8)] {
                for (qb, p) in [(q, pb), (1.0 - q, 1.0 - pb)] {
                    acc += a * qb * (qb / p).ln();
                }
            }
            acc
        };
        let best = (1..1000).map(|k| k as f64 / 1000.0).min_by(|a, b| kl(*a).total_cmp(&kl(*b))).unwrap();
        assert!((best - 0.5).abs() < 1e-3);
        assert!((prior_kl(&net, &s, 1 << 10).unwrap() - kl(0.5)).abs() < 1e-9);
    }

    #[test]
    fn moment_fit_averages_under_the_parent_prior() {
        let net = BayesianNetwork::new(
            vec![Variable::with_cardinality("A", 2), Variable::with_cardinality("B", 2)],
            vec![
                CptRows::new(0, vec![], vec![vec![0.25, 0.75]]),
                CptRows::new(1, vec![0], vec![vec![1.0, 0.0], vec![0.2, 0.8]]),
            ],
        )
        .unwrap();
        let s = moment_fit(&net, &del_edges(&net, 0), DEFAULT_TABLE_CAP).unwrap();
        // P′(B=1) = Σ_a P(a) P(B=1 | a)
        let want: f64 = 0.25 * 0.0 + 0.75 * 0.8;
        assert!((s.base().cpt(1).prob(0, 1) - want).abs() < 1e-12);
        assert_eq!(s.base().cpt(0), net.cpt(0));
        let kept = moment_fit(&net, &del_edges(&net, 1), DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(kept.base(), &net);
    }

    #[test]
    fn barren_evidence_excluded() {
        let net = chain(vec![vec![0.8, 0.2], vec![0.2, 0.8]]);
        let s = del_edges(&net, 0).exclude_evidence(&net, &Evidence::from_pairs([(1, 0)]));
        assert_eq!(s.kept(), vec![0]);
        assert_eq!(prior_kl(&net, &s, 1 << 10).unwrap(), 0.0);
    }
}
