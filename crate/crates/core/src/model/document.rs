//! JSON network documents.
//!
//! ```json
//! {
//!   "variables": [{"name": "A", "states": ["0", "1"]}],
//!   "cpts": [{"child": "A", "parents": [], "table": [[0.7, 0.3]]}],
//!   "evidence": {"A": "1"}
//! }
//! ```
//!
//! Unknown keys are rejected. Serialization is canonical: two-space indent,
//! variables and cpts in declaration order, evidence keys sorted, reals in
//! shortest round-trip form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::network::{BayesianNetwork, CptRows, Evidence, Variable};
use crate::model::validate::{Finding, ValidationReport};
use crate::num::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct VariableDoc {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CptDoc {
    pub child: String,
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NetworkDocument {
    pub variables: Vec<VariableDoc>,
    pub cpts: Vec<CptDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<BTreeMap<String, String>>,
}

impl NetworkDocument {
    pub(crate) fn from_network<T: Real>(net: &BayesianNetwork<T>, ev: Option<&Evidence>) -> Self {
        let variables =
            net.variables().iter().map(|v| VariableDoc { name: v.name.clone(), states: v.states.clone() }).collect();
        let cpts = net
            .cpts()
            .iter()
            .map(|c| CptDoc {
                child: net.name(c.child()).to_string(),
                parents: c.parents().iter().map(|&p| net.name(p).to_string()).collect(),
                table: c.rows().into_iter().map(|r| r.into_iter().map(Real::as_f64).collect()).collect(),
            })
            .collect();
        Self { variables, cpts, evidence: ev.map(|e| e.to_labels(net)) }
    }

    pub(crate) fn into_network<T: Real>(self) -> Result<(BayesianNetwork<T>, Option<Evidence>)> {
        let variables: Vec<Variable> =
            self.variables.into_iter().map(|v| Variable { name: v.name, states: v.states }).collect();
        let lookup = |name: &str| variables.iter().position(|v| v.name == name);

        let mut report = ValidationReport::default();
        let mut cpts = Vec::with_capacity(self.cpts.len());
        for c in self.cpts {
            let Some(child) = lookup(&c.child) else {
                report.push(Finding::UnknownReference { context: "cpt".into(), name: c.child });
                continue;
            };
            let mut parents = Vec::with_capacity(c.parents.len());
            for p in &c.parents {
                match lookup(p) {
                    Some(i) => parents.push(i),
                    None => report
                        .push(Finding::UnknownReference { context: format!("cpt of `{}`", c.child), name: p.clone() }),
                }
            }
            let rows = c.table.into_iter().map(|r| r.into_iter().map(T::lit).collect()).collect();
            cpts.push(CptRows::new(child, parents, rows));
        }
        if !report.is_empty() {
            return Err(Error::Invalid(report));
        }
        let net = BayesianNetwork::new(variables, cpts)?;
        let ev = self.evidence.map(|labels| Evidence::from_labels(&net, &labels)).transpose()?;
        Ok((net, ev))
    }
}

/// Parses a network document, returning inline evidence when present.
pub fn parse_network<T: Real>(text: &str) -> Result<(BayesianNetwork<T>, Option<Evidence>)> {
    let doc: NetworkDocument = serde_json::from_str(text)?;
    doc.into_network()
}

/// Canonical document text, terminated by a newline.
pub fn serialize_network<T: Real>(net: &BayesianNetwork<T>, ev: Option<&Evidence>) -> String {
    let doc = NetworkDocument::from_network(net, ev);
    let mut out = serde_json::to_string_pretty(&doc).expect("network documents serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
      "variables": [
        {"name": "A", "states": ["0", "1"]},
        {"name": "B", "states": ["0", "1"]}
      ],
      "cpts": [
        {"child": "A", "parents": [], "table": [[0.7, 0.3]]},
        {"child": "B", "parents": ["A"], "table": [[0.8, 0.2], [0.1, 0.9]]}
      ]
    }"#;

    #[test]
    fn parses_chain() {
        let (net, ev) = parse_network::<f64>(CHAIN).unwrap();
        assert_eq!(net.num_vars(), 2);
        assert_eq!(net.edges(), vec![(0, 1)]);
        assert!(ev.is_none());
    }

    #[test]
    fn bad_row_sum_names_child() {
        let text = CHAIN.replace("[0.8, 0.2]", "[0.7, 0.2]");
        let err = parse_network::<f64>(&text).unwrap_err();
        let Error::Invalid(report) = err else { panic!("expected validation error, got {err}") };
        assert!(matches!(&report.findings[..], [Finding::RowSum { child, .. }] if child == "B"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = CHAIN.replacen("\"cpts\"", "\"extra\": 1, \"cpts\"", 1);
        assert!(matches!(parse_network::<f64>(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_network::<f64>("{\n  \"variables\": [,\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_parent_reported() {
        let text = CHAIN.replace("\"parents\": [\"A\"]", "\"parents\": [\"Z\"]");
        let err = parse_network::<f64>(&text).unwrap_err();
        assert!(err.to_string().contains("`Z`"));
    }

    #[test]
    fn serialization_is_stable_and_reparses() {
        let (net, _) = parse_network::<f64>(CHAIN).unwrap();
        let mut ev = Evidence::new();
        ev.insert(1, 0);
        let a = serialize_network(&net, Some(&ev));
        let b = serialize_network(&net, Some(&ev));
        assert_eq!(a, b);
        assert!(a.contains("\"evidence\": {\n    \"B\": \"0\"\n  }"));
        let (again, ev2) = parse_network::<f64>(&a).unwrap();
        assert_eq!(again, net);
        assert_eq!(ev2, Some(ev));
        assert_eq!(serialize_network(&again, ev2.as_ref()), a);
    }

    #[test]
    fn evidence_with_bad_state_is_rejected() {
        let body = CHAIN.trim_end().strip_suffix('}').unwrap();
        let text = format!("{body}, \"evidence\": {{\"B\": \"7\"}}}}");
        assert!(matches!(parse_network::<f64>(&text), Err(Error::UnknownState { .. })));
    }
}
