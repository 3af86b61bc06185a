use proptest::prelude::*;

use varis::engine::{estimate_static, run_varis, varis_proposal, RunOptions, SamplerConfig};
use varis::exact::{
    bucket_eliminate, enumerate_likelihood, exact_kl_to_posterior, exact_power_moment, for_each_instance,
    min_fill_order, DEFAULT_ENUMERATION_CAP, DEFAULT_TABLE_CAP,
};
use varis::model::{generate_random_network, BayesianNetwork, Evidence, GeneratorConfig};
use varis::simplify::{del_edges, FitMethod};
use varis::{Network32, Proposal};

const CAP: usize = DEFAULT_ENUMERATION_CAP;

prop_compose! {
    fn networks()(nodes in 3usize..11, max_parents in 1usize..4, states in 2usize..4, det in 0.0f64..0.9,
                   evidence in 1usize..4, seed in any::<u64>()) -> (BayesianNetwork<f64>, Evidence) {
        let cfg = GeneratorConfig {
            nodes,
            max_parents: max_parents.min(nodes - 1),
            states,
            deterministic_fraction: det,
            evidence_leaves: evidence,
        };
        generate_random_network(&cfg, seed).unwrap()
    }
}

/// `ln Σ_h P(h, e)^2 / Q(h)` by direct enumeration.
fn ln_second_moment(net: &BayesianNetwork<f64>, ev: &Evidence, q: &Proposal) -> f64 {
    let mut terms = Vec::new();
    for_each_instance(net, ev, CAP, |full| {
        let lp = net.log_prob_full(full);
        if lp > f64::NEG_INFINITY {
            terms.push(2.0 * lp - q.log_prob(full));
        }
    })
    .unwrap();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bucket_elimination_matches_enumeration((net, ev) in networks()) {
        let (be, _) = bucket_eliminate(&net, &ev, &min_fill_order(&net), DEFAULT_TABLE_CAP).unwrap();
        let en = enumerate_likelihood(&net, &ev, CAP).unwrap();
        prop_assert!((be - en).abs() < 1e-9, "{} vs {}", be, en);
    }

    #[test]
    fn proposals_dominate_the_posterior((net, ev) in networks(), width in 0usize..3, exclusive in any::<bool>()) {
        let fit = if exclusive { FitMethod::Exclusive } else { FitMethod::Moment };
        let cfg = SamplerConfig { width_bound: width, fit, ..SamplerConfig::default() };
        let (_, q) = varis_proposal(&net, &ev, &cfg).unwrap();
        for_each_instance(&net, &ev, CAP, |full| {
            if net.log_prob_full(full) > f64::NEG_INFINITY {
                assert!(q.log_prob(full) > f64::NEG_INFINITY, "{full:?}");
            }
        })
        .unwrap();
    }

    #[test]
    fn second_moment_and_divergence_identities((net, ev) in networks(), width in 0usize..3) {
        let cfg = SamplerConfig { width_bound: width, ..SamplerConfig::default() };
        let (_, q) = varis_proposal(&net, &ev, &cfg).unwrap();
        let ln_p = enumerate_likelihood(&net, &ev, CAP).unwrap();
        let m2 = 2.0 * exact_power_moment(&q, &net, &ev, 2.0, CAP).unwrap();
        prop_assert!((m2 - ln_second_moment(&net, &ev, &q)).abs() < 1e-9);
        // Var_Q(P/Q) = E[w^2] - P(e)^2 ≥ 0
        prop_assert!(m2 >= 2.0 * ln_p - 1e-9);
        let m1 = exact_power_moment(&q, &net, &ev, 1.0, CAP).unwrap();
        prop_assert!((m1 - ln_p).abs() < 1e-9);
        // D(Q ‖ P(·|e)) = ln P(e) − E_Q[ln w]
        let kl = exact_kl_to_posterior(&q, &net, &ev, CAP).unwrap();
        let m0 = exact_power_moment(&q, &net, &ev, 0.0, CAP).unwrap();
        prop_assert!(kl >= -1e-12);
        if kl.is_finite() {
            prop_assert!((kl - (ln_p - m0)).abs() < 1e-9, "{} vs {}", kl, ln_p - m0);
        } else {
            prop_assert_eq!(m0, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn static_runs_are_reproducible((net, ev) in networks(), seed in any::<u64>()) {
        let cfg = SamplerConfig { samples: 300, batch: 50, width_bound: 1, seed, ..SamplerConfig::default() };
        let a = run_varis(&net, &ev, &cfg, RunOptions::STATIC).unwrap();
        let b = run_varis(&net, &ev, &cfg, RunOptions::STATIC).unwrap();
        prop_assert_eq!(a.trace_csv(), b.trace_csv());
        let (_, q) = varis_proposal(&net, &ev, &cfg).unwrap();
        let s = estimate_static(&net, &ev, &q, cfg.samples, seed);
        prop_assert_eq!(a.estimate_ln.to_bits(), s.estimate_ln.to_bits());
    }
}

#[test]
fn single_precision_tracks_double() {
    let cfg = GeneratorConfig { nodes: 9, max_parents: 2, states: 2, deterministic_fraction: 0.4, evidence_leaves: 3 };
    let (net, ev) = generate_random_network::<f64>(&cfg, 21).unwrap();
    let (net32, ev32): (Network32, Evidence) = generate_random_network(&cfg, 21).unwrap();
    assert_eq!(ev, ev32);
    let exact = enumerate_likelihood(&net, &ev, CAP).unwrap();
    let exact32 = enumerate_likelihood(&net32, &ev32, CAP).unwrap();
    assert!((exact - exact32 as f64).abs() < 1e-4);

    let sampler = SamplerConfig { samples: 1, batch: 1, width_bound: 99, ..SamplerConfig::default() };
    let r = run_varis(&net32, &ev32, &sampler, RunOptions::default()).unwrap();
    assert!((r.estimate_ln as f64 - exact).abs() < 1e-4);
    assert!(del_edges(&net32, 99).deleted_edges().is_empty());
}
