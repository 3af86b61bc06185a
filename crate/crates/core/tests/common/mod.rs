#![allow(dead_code)]

use varis::exact::{enumerate_likelihood, DEFAULT_ENUMERATION_CAP};
use varis::model::{generate_random_network, BayesianNetwork, Evidence, GeneratorConfig};

pub struct Case {
    pub name: String,
    pub net: BayesianNetwork<f64>,
    pub ev: Evidence,
    pub ln_exact: f64,
}

/// Fixed suite of 50 binary networks with 10 to 14 nodes, at least 30%
/// deterministic rows and evidence on leaves.
pub fn suite() -> Vec<Case> {
    (0..50)
        .map(|i| {
            let cfg = GeneratorConfig {
                nodes: 10 + i % 5,
                max_parents: 3,
                states: 2,
                deterministic_fraction: 0.3 + 0.1 * (i % 4) as f64,
                evidence_leaves: 4,
            };
            case(&format!("suite{i:02}"), &cfg, 1000 + i as u64)
        })
        .collect()
}

pub fn case(name: &str, cfg: &GeneratorConfig, seed: u64) -> Case {
    let (net, ev) = generate_random_network::<f64>(cfg, seed).unwrap();
    let ln_exact = enumerate_likelihood(&net, &ev, DEFAULT_ENUMERATION_CAP).unwrap();
    Case { name: name.to_string(), net, ev, ln_exact }
}

pub fn percent_error(est: f64, exact: f64) -> f64 {
    if est == exact {
        0.0
    } else {
        100.0 * (est - exact).abs() / exact.abs()
    }
}

/// Writes to the stderr handle directly so the line is shown without
/// `--nocapture`.
pub fn report(id: usize, title: &str, pass: bool, detail: &str) {
    use std::io::Write;
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {verdict:<4} {title}: {detail}");
}
