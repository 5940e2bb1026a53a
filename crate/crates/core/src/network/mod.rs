//! Discrete belief networks.
//!
//! Variables, states and parents are addressed by index; names only matter
//! at the I/O boundary. A [`BeliefNetwork`] can hold ill-formed data so that
//! [`BeliefNetwork::validate`] can report every problem at once; the
//! parsers and [`BeliefNetwork::checked`] only hand out networks that pass.

mod enumerate;
mod graph;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use enumerate::{exact_posterior_enumeration, joint_probability, DEFAULT_ENUMERATION_CAP};
pub use graph::{find_loop_cutset, is_singly_connected, topological_order};

/// A discrete variable with its conditional probability table.
///
/// `cpt` is row-major: one row per parent-state combination, rows in
/// lexicographic order of parent states (first parent most significant),
/// each row holding one probability per own state.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<usize>,
    pub cpt: Vec<T>,
}

impl<T: Real> Variable<T> {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn row(&self, row: usize) -> &[T] {
        let k = self.cardinality();
        &self.cpt[row * k..(row + 1) * k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefNetwork<T> {
    /// Free-text description of the background knowledge the model encodes.
    pub provenance: Option<String>,
    variables: Vec<Variable<T>>,
    by_name: HashMap<String, usize>,
}

impl<T: Real> BeliefNetwork<T> {
    /// Wraps variables without validating them.
    pub fn from_variables(variables: Vec<Variable<T>>) -> Self {
        let by_name = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        Self {
            provenance: None,
            variables,
            by_name,
        }
    }

    /// Wraps and validates; the first error-severity issue becomes the error.
    pub fn checked(variables: Vec<Variable<T>>) -> Result<Self> {
        Self::from_variables(variables).into_checked()
    }

    /// Validates an already assembled network, keeping its provenance.
    pub fn into_checked(self) -> Result<Self> {
        let report = self.validate();
        match report.first_error() {
            None => Ok(self),
            Some(issue) if issue.message.starts_with("directed cycle") => {
                Err(Error::NotADag(issue.location.clone()))
            }
            Some(issue) => Err(Error::InvalidNetwork(issue.to_string())),
        }
    }

    pub fn variables(&self) -> &[Variable<T>] {
        &self.variables
    }

    pub fn variable(&self, index: usize) -> &Variable<T> {
        &self.variables[index]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn cardinality(&self, index: usize) -> usize {
        self.variables[index].cardinality()
    }

    /// Children lists derived from the parent references.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (child, v) in self.variables.iter().enumerate() {
            for &p in &v.parents {
                if p < self.len() {
                    children[p].push(child);
                }
            }
        }
        children
    }

    /// Number of full joint assignments, as a float so huge networks don't overflow.
    pub fn state_space_size(&self) -> f64 {
        self.variables
            .iter()
            .map(|v| v.cardinality() as f64)
            .product()
    }

    /// Row of `var`'s CPT selected by the parent states in a full assignment.
    pub fn row_index(&self, var: usize, assignment: &[usize]) -> usize {
        self.variables[var]
            .parents
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + assignment[p])
    }

    /// Converts every probability to another scalar type.
    pub fn cast<U: Real>(&self) -> BeliefNetwork<U> {
        BeliefNetwork {
            provenance: self.provenance.clone(),
            variables: self
                .variables
                .iter()
                .map(|v| Variable {
                    name: v.name.clone(),
                    states: v.states.clone(),
                    parents: v.parents.clone(),
                    cpt: v.cpt.iter().map(|&x| U::lit(x.as_f64())).collect(),
                })
                .collect(),
            by_name: self.by_name.clone(),
        }
    }

    /// Reports every violated structural or numeric invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let n = self.len();
        let mut seen = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            let loc = format!("variable {}", v.name);
            if let Some(prev) = seen.insert(v.name.as_str(), i) {
                issues.push(Issue::error(
                    format!("duplicate variable name (also index {prev})"),
                    loc.clone(),
                ));
            }
            if v.states.len() < 2 {
                issues.push(Issue::error(
                    format!("variable has {} states, need at least 2", v.states.len()),
                    loc.clone(),
                ));
            }
            let mut state_names = std::collections::HashSet::new();
            for s in &v.states {
                if !state_names.insert(s.as_str()) {
                    issues.push(Issue::error(format!("duplicate state {s}"), loc.clone()));
                }
            }
            let mut parents_ok = true;
            for (k, &p) in v.parents.iter().enumerate() {
                if p >= n {
                    issues.push(Issue::error(
                        format!("parent index {p} out of range (network has {n} variables)"),
                        loc.clone(),
                    ));
                    parents_ok = false;
                } else if p == i {
                    issues.push(Issue::error("variable is its own parent", loc.clone()));
                } else if v.parents[..k].contains(&p) {
                    issues.push(Issue::error(
                        format!("parent {} listed twice", self.variables[p].name),
                        loc.clone(),
                    ));
                }
            }
            if !parents_ok || v.states.is_empty() {
                continue;
            }
            let rows: usize = v.parents.iter().map(|&p| self.cardinality(p)).product();
            let width = v.cardinality();
            if v.cpt.len() != rows * width {
                issues.push(Issue::error(
                    format!(
                        "cpt has {} entries, expected {rows} rows x {width} states = {}",
                        v.cpt.len(),
                        rows * width
                    ),
                    loc.clone(),
                ));
                continue;
            }
            for r in 0..rows {
                let row = v.row(r);
                for (s, &x) in row.iter().enumerate() {
                    if !(x >= T::zero() && x <= T::one()) {
                        issues.push(Issue::error(
                            format!("cpt entry {x} outside [0, 1]"),
                            format!("{loc}, row {r}, state {}", v.states[s]),
                        ));
                    }
                }
                let sum: T = row.iter().copied().sum();
                if (sum - T::one()).abs() > T::normalization_tolerance() || sum.is_nan() {
                    issues.push(Issue::error(
                        format!("cpt row sum {sum} ≠ 1"),
                        format!("{loc}, row {r}"),
                    ));
                }
            }
        }
        if let Some(cycle) = graph::find_directed_cycle(self) {
            let names: Vec<&str> = cycle
                .iter()
                .map(|&i| self.variables[i].name.as_str())
                .collect();
            issues.push(Issue::error(
                format!("directed cycle {}", names.join(" -> ")),
                names.join(" -> "),
            ));
        }
        ValidationReport::new(issues)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
    pub location: String,
}

impl Issue {
    pub fn error(message: impl Into<String>, location: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
            location: location.into(),
        }
    }

    pub fn warning(message: impl Into<String>, location: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
            location: location.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.severity, self.message, self.location)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new(issues: Vec<Issue>) -> Self {
        let ok = issues.iter().all(|i| i.severity != Severity::Error);
        Self { ok, issues }
    }

    pub fn first_error(&self) -> Option<&Issue> {
        self.issues.iter().find(|i| i.severity == Severity::Error)
    }
}

/// Observed states, keyed by variable index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence(BTreeMap<usize, usize>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observation. Observing the same variable twice is an error.
    pub fn observe(&mut self, var: usize, state: usize) -> Result<()> {
        if self.0.insert(var, state).is_some() {
            return Err(Error::InvalidEvidence(format!(
                "variable index {var} observed twice"
            )));
        }
        Ok(())
    }

    pub fn with(mut self, var: usize, state: usize) -> Result<Self> {
        self.observe(var, state)?;
        Ok(self)
    }

    /// Builds evidence from (variable name, state name) pairs.
    pub fn from_names<'a, T: Real>(
        net: &BeliefNetwork<T>,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut ev = Self::new();
        for (var, state) in pairs {
            let vi = net
                .index_of(var)
                .ok_or_else(|| Error::InvalidEvidence(format!("unknown variable {var}")))?;
            let si = net.variable(vi).state_index(state).ok_or_else(|| {
                Error::InvalidEvidence(format!("unknown state {state} of variable {var}"))
            })?;
            ev.observe(vi, si)?;
        }
        Ok(ev)
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&v, &s)| (v, s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks every index against the network's variables and cardinalities.
    pub fn check<T: Real>(&self, net: &BeliefNetwork<T>) -> Result<()> {
        for (v, s) in self.iter() {
            if v >= net.len() {
                return Err(Error::InvalidEvidence(format!(
                    "variable index {v} out of range"
                )));
            }
            if s >= net.cardinality(v) {
                return Err(Error::InvalidEvidence(format!(
                    "state index {s} out of range for {}",
                    net.variable(v).name
                )));
            }
        }
        Ok(())
    }
}
