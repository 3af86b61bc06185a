use std::collections::HashSet;
use std::fmt;

use crate::model::network::{topological_sort, CptRows, Variable, ROW_SUM_TOLERANCE};
use crate::model::BayesianNetwork;
use crate::num::Real;

/// A single problem found while validating a network.
#[derive(Clone, Debug, PartialEq)]
pub enum Finding {
    DuplicateVariable(String),
    DuplicateState { variable: String, state: String },
    TooFewStates(String),
    UnknownReference { context: String, name: String },
    MissingCpt(String),
    DuplicateCpt(String),
    DuplicateParent { child: String, parent: String },
    TableShape { child: String, expected_rows: usize, expected_width: usize, detail: String },
    InvalidEntry { child: String, row: usize, value: f64 },
    RowSum { child: String, row: usize, sum: f64, deviation: f64 },
    Cycle(Vec<String>),
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateVariable(n) => write!(f, "duplicate variable `{n}`"),
            Finding::DuplicateState { variable, state } => {
                write!(f, "variable `{variable}` repeats state `{state}`")
            }
            Finding::TooFewStates(n) => write!(f, "variable `{n}` needs at least two states"),
            Finding::UnknownReference { context, name } => {
                write!(f, "{context} refers to unknown variable `{name}`")
            }
            Finding::MissingCpt(n) => write!(f, "variable `{n}` has no cpt"),
            Finding::DuplicateCpt(n) => write!(f, "variable `{n}` has more than one cpt"),
            Finding::DuplicateParent { child, parent } => {
                write!(f, "cpt of `{child}` lists parent `{parent}` twice")
            }
            Finding::TableShape { child, expected_rows, expected_width, detail } => {
                write!(f, "cpt of `{child}` should have {expected_rows} rows of {expected_width} entries: {detail}")
            }
            Finding::InvalidEntry { child, row, value } => {
                write!(f, "cpt of `{child}` row {row} has invalid entry {value}")
            }
            Finding::RowSum { child, row, sum, deviation } => {
                write!(f, "cpt of `{child}` row {row} sums to {sum} (deviation {deviation:.3e})")
            }
            Finding::Cycle(vars) => write!(f, "cycle through {}", vars.join(" -> ")),
        }
    }
}

/// Findings from [`validate_network`]; empty iff the network is valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn push(&mut self, f: Finding) {
        self.findings.push(f);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.findings.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Re-checks a constructed network. Networks are validated on construction,
/// so this is empty unless the invariants were broken elsewhere.
pub fn validate_network<T: Real>(net: &BayesianNetwork<T>) -> ValidationReport {
    validate_parts(net.variables(), &net.to_rows())
}

/// Validates raw network parts: names, table shapes, row sums and acyclicity.
pub fn validate_parts<T: Real>(variables: &[Variable], cpts: &[CptRows<T>]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = variables.len();
    let name = |i: usize| variables.get(i).map(|v| v.name.clone()).unwrap_or_else(|| format!("#{i}"));

    let mut seen = HashSet::new();
    for v in variables {
        if !seen.insert(v.name.as_str()) {
            report.push(Finding::DuplicateVariable(v.name.clone()));
        }
        if v.states.len() < 2 {
            report.push(Finding::TooFewStates(v.name.clone()));
        }
        let mut states = HashSet::new();
        for s in &v.states {
            if !states.insert(s.as_str()) {
                report.push(Finding::DuplicateState { variable: v.name.clone(), state: s.clone() });
            }
        }
    }

    let mut owner = vec![0usize; n];
    let mut structural_ok = true;
    for c in cpts {
        if c.child >= n {
            report.push(Finding::UnknownReference { context: "cpt".into(), name: name(c.child) });
            structural_ok = false;
            continue;
        }
        owner[c.child] += 1;
        let mut ps = HashSet::new();
        for &p in &c.parents {
            if p >= n {
                report
                    .push(Finding::UnknownReference { context: format!("cpt of `{}`", name(c.child)), name: name(p) });
                structural_ok = false;
            } else if !ps.insert(p) {
                report.push(Finding::DuplicateParent { child: name(c.child), parent: name(p) });
                structural_ok = false;
            }
        }
    }
    for (i, &count) in owner.iter().enumerate() {
        match count {
            0 => {
                report.push(Finding::MissingCpt(name(i)));
                structural_ok = false;
            }
            1 => {}
            _ => {
                report.push(Finding::DuplicateCpt(name(i)));
                structural_ok = false;
            }
        }
    }
    if !structural_ok {
        return report;
    }

    for c in cpts {
        let width = variables[c.child].cardinality();
        let expected_rows: usize = c.parents.iter().map(|&p| variables[p].cardinality()).product();
        if c.rows.len() != expected_rows || c.rows.iter().any(|r| r.len() != width) {
            report.push(Finding::TableShape {
                child: name(c.child),
                expected_rows,
                expected_width: width,
                detail: format!("found {} rows", c.rows.len()),
            });
            continue;
        }
        for (r, row) in c.rows.iter().enumerate() {
            if let Some(&bad) = row.iter().find(|&&p| !(p >= T::zero() && p <= T::one())) {
                report.push(Finding::InvalidEntry { child: name(c.child), row: r, value: bad.as_f64() });
                continue;
            }
            let sum: f64 = row.iter().map(|p| p.as_f64()).sum();
            let deviation = (sum - 1.0).abs();
            if deviation > ROW_SUM_TOLERANCE {
                report.push(Finding::RowSum { child: name(c.child), row: r, sum, deviation });
            }
        }
    }

    let mut parents: Vec<&[usize]> = vec![&[]; n];
    for c in cpts {
        parents[c.child] = &c.parents;
    }
    if let Err(stuck) = topological_sort(&parents) {
        report.push(Finding::Cycle(extract_cycle(&parents, &stuck).into_iter().map(name).collect()));
    }
    report
}

/// Walks parent links inside the stuck set until a vertex repeats.
fn extract_cycle(parents: &[&[usize]], stuck: &[usize]) -> Vec<usize> {
    let in_stuck: HashSet<usize> = stuck.iter().copied().collect();
    let mut path = vec![stuck[0]];
    loop {
        let cur = *path.last().unwrap();
        let next = parents[cur].iter().copied().find(|p| in_stuck.contains(p)).unwrap();
        if let Some(pos) = path.iter().position(|&v| v == next) {
            let mut cycle: Vec<usize> = path[pos..].to_vec();
            cycle.reverse();
            cycle.push(cycle[0]);
            return cycle;
        }
        path.push(next);
    }
}
