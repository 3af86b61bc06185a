use crate::error::Result;
use crate::exact::factor::{check_cap, table_size};
use crate::model::{BayesianNetwork, Evidence};
use crate::num::{LogSumExp, Real};

/// Calls `visit` with every full instance consistent with `ev`, hidden
/// variables varying in odometer order (last hidden variable fastest).
pub fn for_each_instance<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cap: usize,
    mut visit: impl FnMut(&[usize]),
) -> Result<()> {
    ev.check(net)?;
    let n = net.num_vars();
    let hidden = ev.hidden(n);
    check_cap("enumeration", table_size(hidden.iter().map(|&v| net.card(v))), cap)?;
    let mut full = vec![0usize; n];
    for (v, s) in ev.iter() {
        full[v] = s;
    }
    loop {
        visit(&full);
        let mut k = hidden.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            let v = hidden[k];
            full[v] += 1;
            if full[v] < net.card(v) {
                break;
            }
            full[v] = 0;
        }
    }
}

/// Exact `ln P(e)` by summing the joint over every hidden configuration.
pub fn enumerate_likelihood<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence, cap: usize) -> Result<T> {
    let mut acc = LogSumExp::new();
    for_each_instance(net, ev, cap, |full| acc.push(net.log_prob_full(full)))?;
    Ok(acc.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::{CptRows, Variable};

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
    fn chain_likelihood() {
        let lp = enumerate_likelihood(&chain(), &Evidence::from_pairs([(1, 1)]), 1 << 10).unwrap();
        assert!((lp - 0.41f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_evidence_is_one() {
        let lp = enumerate_likelihood(&chain(), &Evidence::new(), 1 << 10).unwrap();
        assert!(lp.abs() < 1e-12);
    }

    #[test]
    fn visits_every_instance_once() {
        let mut seen = Vec::new();
        for_each_instance(&chain(), &Evidence::new(), 16, |f| seen.push(f.to_vec())).unwrap();
        assert_eq!(seen, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn cap_exceeded() {
        assert!(matches!(enumerate_likelihood(&chain(), &Evidence::new(), 3), Err(Error::CapExceeded { .. })));
    }
}
