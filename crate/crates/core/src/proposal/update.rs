use crate::error::{Error, Result};
use crate::model::CptRows;
use crate::num::Real;
use crate::proposal::{ProposalDistribution, SampleRecord};
use crate::simplify::{SimplifiedNetwork, FLOOR};

/// Blends every visited row of `q` with the importance-weighted state
/// frequencies of `batch`:
/// `Q′(x | s) = (1 − η) Q(x | s) + η N(x, s) / N(s)`.
///
/// Samples count with weight proportional to their importance ratio, so
/// infeasible samples count for nothing. Rows never visited are unchanged.
/// Entries positive before the update are floored at [`FLOOR`] and rows
/// renormalized; zero entries stay zero.
pub fn anneal_update<T: Real>(
    q: &ProposalDistribution<T>,
    batch: &[SampleRecord<T>],
    eta: T,
) -> ProposalDistribution<T> {
    let max = batch.iter().map(|s| s.log_ratio).fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || eta == T::zero() {
        return q.clone();
    }
    let weights: Vec<T> = batch.iter().map(|s| (s.log_ratio - max).exp()).collect();
    let floor = T::lit(FLOOR);
    let mut out = q.clone();
    let order = q.order().to_vec();
    for v in order {
        let table = q.table(v).expect("sampled variable has a table");
        let card = table.cardinality();
        let mut counts = vec![T::zero(); table.probs().len()];
        for (s, &w) in batch.iter().zip(&weights) {
            if w > T::zero() {
                let idx = table.row_index(&s.assignment) * card + s.assignment[v];
                counts[idx] = counts[idx] + w;
            }
        }
        let mut probs = table.probs().to_vec();
        for r in 0..table.num_rows() {
            let row_counts = &counts[r * card..(r + 1) * card];
            let total: T = row_counts.iter().copied().sum();
            if total <= T::zero() {
                continue;
            }
            let row = &mut probs[r * card..(r + 1) * card];
            for (p, &c) in row.iter_mut().zip(row_counts) {
                let blended = (T::one() - eta) * *p + eta * c / total;
                *p = if *p > T::zero() { blended.max(floor) } else { blended };
            }
            let sum: T = row.iter().copied().sum();
            row.iter_mut().for_each(|p| *p = *p / sum);
        }
        out.tables_mut()[v] = Some(table.with_probs(probs));
    }
    out
}

/// Direction of [`direct_transform`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Sharpen,
    Flatten,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Sharpen => "sharpen",
            Direction::Flatten => "flatten",
        }
    }
}

/// Raises every table entry of the simplified network below `alpha` or above
/// `1 − alpha` to a power and renormalizes the rows.
///
/// Sharpening maps `q < α` to `q^(1+β)` and `q > 1−α` to `q^(1−β)`;
/// flattening swaps the exponents.
pub fn direct_transform<T: Real>(
    simp: &SimplifiedNetwork<T>,
    direction: Direction,
    alpha: T,
    beta: T,
) -> Result<SimplifiedNetwork<T>> {
    let half = T::lit(0.5);
    if !(alpha > T::zero() && alpha < half) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::InvalidConfig(format!("beta must lie in (0, 1), got {beta}")));
    }
    let (low, high) = match direction {
        Direction::Sharpen => (T::one() + beta, T::one() - beta),
        Direction::Flatten => (T::one() - beta, T::one() + beta),
    };
    let base = simp.base();
    let rows = base
        .cpts()
        .iter()
        .map(|cpt| {
            let rows = cpt
                .rows()
                .into_iter()
                .map(|row| {
                    let mut row: Vec<T> = row
                        .into_iter()
                        .map(|q| {
                            if q < alpha {
                                q.powf(low)
                            } else if q > T::one() - alpha {
                                q.powf(high)
                            } else {
                                q
                            }
                        })
                        .collect();
                    let sum: T = row.iter().copied().sum();
                    row.iter_mut().for_each(|q| *q = *q / sum);
                    row
                })
                .collect();
            CptRows::new(cpt.child(), cpt.parents().to_vec(), rows)
        })
        .collect();
    Ok(simp.with_base(base.with_cpts(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BayesianNetwork, Evidence, Variable};
    use crate::proposal::ProposalDistribution;

    fn single(p: Vec<f64>) -> BayesianNetwork<f64> {
        let k = p.len();
        BayesianNetwork::new(vec![Variable::with_cardinality("A", k)], vec![CptRows::new(0, vec![], vec![p])]).unwrap()
    }

    fn record(x: usize, log_ratio: f64) -> SampleRecord<f64> {
        SampleRecord { assignment: vec![x], log_q: 0.0, log_p: log_ratio, log_ratio }
    }

    #[test]
    fn blend_matches_hand_value() {
        let net = single(vec![0.5, 0.5]);
        let q = ProposalDistribution::prior(&net, &Evidence::new());
        let batch = vec![record(0, 0.0), record(0, 0.0), record(0, 0.0), record(1, 0.0)];
        let q2 = anneal_update(&q, &batch, 0.12);
        let row = q2.table(0).unwrap().row(0);
        assert!((row[0] - 0.53).abs() < 1e-12);
        assert!((row[1] - 0.47).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_is_identity() {
        let net = single(vec![0.2, 0.8]);
        let q = ProposalDistribution::prior(&net, &Evidence::new());
        assert_eq!(anneal_update(&q, &[record(1, 0.0)], 0.0), q);
    }

    #[test]
    fn full_rate_is_floored_point_mass() {
        let net = single(vec![0.2, 0.8]);
        let q = ProposalDistribution::prior(&net, &Evidence::new());
        let row = anneal_update(&q, &[record(1, -1.0)], 1.0).table(0).unwrap().row(0).to_vec();
        assert!((row[0] - FLOOR / (1.0 + FLOOR)).abs() < 1e-15);
        assert!(row[0] > 0.0);
    }

    #[test]
    fn transform_exponents() {
        let net = single(vec![0.05, 0.5, 0.45]);
        let s = SimplifiedNetwork::identity(&net);
        let t = direct_transform(&s, Direction::Sharpen, 0.1, 0.2).unwrap();
        let row = t.base().cpt(0).row(0);
        let raw = [0.05f64.powf(1.2), 0.5, 0.45];
        let z: f64 = raw.iter().sum();
        for k in 0..3 {
            assert!((row[k] - raw[k] / z).abs() < 1e-12);
        }
        assert!((0.05f64.powf(1.2) - 0.027464).abs() < 1e-6);
        assert!((0.95f64.powf(0.8) - 0.959796).abs() < 1e-6);
        assert!(direct_transform(&s, Direction::Flatten, 0.5, 0.2).is_err());
        assert!(direct_transform(&s, Direction::Flatten, 0.1, 1.0).is_err());
    }
}
