use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::network::{BayesianNetwork, CptRows, Evidence, Variable};
use crate::num::Real;

/// Shape of a randomly generated network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub max_parents: usize,
    /// Cardinality of every variable.
    pub states: usize,
    /// Minimum fraction of CPT rows that are point masses.
    pub deterministic_fraction: f64,
    /// Number of leaves observed. Clamped to the number of leaves present.
    pub evidence_leaves: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { nodes: 12, max_parents: 3, states: 2, deterministic_fraction: 0.4, evidence_leaves: 4 }
    }
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidConfig("nodes must be at least 1".into()));
        }
        if self.max_parents >= self.nodes {
            return Err(Error::InvalidConfig(format!(
                "max parents {} must be below the node count {}",
                self.max_parents, self.nodes
            )));
        }
        if self.states < 2 {
            return Err(Error::InvalidConfig("variables need at least two states".into()));
        }
        if !(0.0..=1.0).contains(&self.deterministic_fraction) {
            return Err(Error::InvalidConfig("deterministic fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Random acyclic network plus evidence taken from one forward sample, so
/// the evidence always has positive probability.
pub fn generate_random_network<T: Real>(cfg: &GeneratorConfig, seed: u64) -> Result<(BayesianNetwork<T>, Evidence)> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.nodes;
    let card = cfg.states;

    let variables: Vec<Variable> = (0..n).map(|i| Variable::with_cardinality(format!("X{i}"), card)).collect();
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let cap = cfg.max_parents.min(i);
            if cap == 0 {
                return Vec::new();
            }
            let k = rng.gen_range(1..=cap);
            let mut ps = sample(&mut rng, i, k).into_vec();
            ps.sort_unstable();
            ps
        })
        .collect();

    let row_counts: Vec<usize> = parents.iter().map(|ps| card.pow(ps.len() as u32)).collect();
    let total_rows: usize = row_counts.iter().sum();
    let wanted = ((cfg.deterministic_fraction * total_rows as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut deterministic = vec![false; total_rows];
    for r in sample(&mut rng, total_rows, wanted.min(total_rows)) {
        deterministic[r] = true;
    }

    let mut offset = 0;
    let cpts: Vec<CptRows<T>> = parents
        .iter()
        .enumerate()
        .map(|(i, ps)| {
            let rows = (0..row_counts[i])
                .map(|r| {
                    if deterministic[offset + r] {
                        let s = rng.gen_range(0..card);
                        (0..card).map(|x| if x == s { T::one() } else { T::zero() }).collect()
                    } else {
                        // Dirichlet(1) via normalized exponentials.
                        let raw: Vec<f64> = (0..card).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                        let sum: f64 = raw.iter().sum();
                        raw.into_iter().map(|x| T::lit(x / sum)).collect()
                    }
                })
                .collect();
            offset += row_counts[i];
            CptRows::new(i, ps.clone(), rows)
        })
        .collect();

    let net = BayesianNetwork::new(variables, cpts)?;

    let instance = forward_sample(&net, &mut rng);
    let leaves: Vec<usize> = (0..n).filter(|&v| net.children(v).is_empty()).collect();
    let k = cfg.evidence_leaves.min(leaves.len());
    let mut chosen: Vec<usize> = sample(&mut rng, leaves.len(), k).into_iter().map(|i| leaves[i]).collect();
    chosen.sort_unstable();
    let evidence = Evidence::from_pairs(chosen.into_iter().map(|v| (v, instance[v])));
    Ok((net, evidence))
}

/// Draws one full instance from the prior in topological order.
pub fn forward_sample<T: Real, R: Rng + ?Sized>(net: &BayesianNetwork<T>, rng: &mut R) -> Vec<usize> {
    let mut x = vec![0; net.num_vars()];
    for v in net.topological_order() {
        let cpt = net.cpt(v);
        let row = cpt.row(cpt.row_index(&x));
        x[v] = sample_row(row, T::lit(rng.gen::<f64>()));
    }
    x
}

/// Inverse-CDF draw from an unnormalized row; states with zero mass are never
/// returned.
pub(crate) fn sample_row<T: Real>(row: &[T], u: T) -> usize {
    let total: T = row.iter().copied().sum();
    let target = u * total;
    let mut acc = T::zero();
    let mut last = None;
    for (s, &p) in row.iter().enumerate() {
        if p <= T::zero() {
            continue;
        }
        acc = acc + p;
        last = Some(s);
        if target < acc {
            return s;
        }
    }
    last.expect("row has positive mass")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_fraction_respected() {
        for &phi in &[0.0, 0.3, 0.75, 1.0] {
            let cfg = GeneratorConfig { deterministic_fraction: phi, ..Default::default() };
            let (net, _) = generate_random_network::<f64>(&cfg, 11).unwrap();
            assert!(net.deterministic_fraction() >= phi - 1e-12, "phi {phi}");
        }
    }

    #[test]
    fn same_seed_same_network() {
        let cfg = GeneratorConfig::default();
        let a = generate_random_network::<f64>(&cfg, 5).unwrap();
        let b = generate_random_network::<f64>(&cfg, 5).unwrap();
        assert_eq!(a, b);
        let c = generate_random_network::<f64>(&cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_configs_rejected() {
        let cfg = GeneratorConfig { nodes: 3, max_parents: 3, ..Default::default() };
        assert!(matches!(generate_random_network::<f64>(&cfg, 0), Err(Error::InvalidConfig(_))));
        let cfg = GeneratorConfig { states: 1, ..Default::default() };
        assert!(generate_random_network::<f64>(&cfg, 0).is_err());
    }

    #[test]
    fn evidence_on_leaves() {
        let cfg = GeneratorConfig { nodes: 14, evidence_leaves: 3, ..Default::default() };
        let (net, ev) = generate_random_network::<f64>(&cfg, 3).unwrap();
        assert!(!ev.is_empty());
        for (v, _) in ev.iter() {
            assert!(net.children(v).is_empty());
        }
    }

    #[test]
    fn sample_row_skips_zero_mass() {
        let row = [0.0, 0.5, 0.0, 0.5];
        assert_eq!(sample_row(&row, 0.0), 1);
        assert_eq!(sample_row(&row, 0.49), 1);
        assert_eq!(sample_row(&row, 0.51), 3);
        assert_eq!(sample_row(&row, 0.999_999_999), 3);
    }
}
