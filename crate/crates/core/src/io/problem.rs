//! Decision-problem format: a schema-versioned TOML document.
//!
//! ```toml
//! schema = 1
//! id = "chf"
//!
//! [hypothesis]
//! variable = "LVFAILURE"
//! state = "TRUE"
//!
//! [evidence]
//! HISTORY = "TRUE"
//!
//! [[action]]
//! name = "treat"
//! h1 = { u0 = 1.0, decay = { kind = "exp", k = 0.001 } }
//! h2 = { u0 = 0.3 }                       # no decay: constant
//!
//! [[action]]
//! name = "wait"
//! h1 = { u0 = 0.6, decay = { kind = "linear", c = 0.002 } }
//! h2 = { u0 = 0.9, decay = { kind = "piecewise", segments = [
//!     { start = 0.0, kind = "constant" },
//!     { start = 30.0, kind = "exp", k = 0.01 },
//! ] } }
//!
//! [[rule]]
//! vital = "systolicBP"
//! comparator = "<"
//! threshold = 90.0
//! action = "treat"
//! outcome = "h1"
//! parameter = "k"
//! value = 0.008
//!
//! [vitals]
//! systolicBP = 85.0
//!
//! [clock]
//! cost_per_instantiation = 1.0            # or one entry per step
//! meta_cost = 0.05
//! setup_factor = 0.01
//! ```
//!
//! `h1` is the designated hypothesis state and `h2` its complement. Rules may
//! only test vitals from [`KNOWN_VITALS`] or the document's own
//! `extra_vitals` list.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use super::toml_error;
use crate::clock::{CostSchedule, VirtualClock};
use crate::decision::{ActionUtilities, DecisionProblem, Side};
use crate::error::{Error, ParseError, Result};
use crate::network::{BeliefNetwork, Evidence};
use crate::utility::{
    Comparator, CriticalityRule, Decay, DecayLaw, OutcomeKey, OutcomeUtility, Parameter, Segment,
};

pub const PROBLEM_SCHEMA: i64 = 1;

/// Vital signs rules may test without declaring them.
pub const KNOWN_VITALS: &[&str] = &[
    "age",
    "heartRate",
    "systolicBP",
    "diastolicBP",
    "respiratoryRate",
    "temperature",
    "paO2",
    "spO2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub name: String,
    pub h1: OutcomeUtility<f64>,
    pub h2: OutcomeUtility<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockConfig {
    pub cost_per_instantiation: CostSchedule<f64>,
    pub meta_cost: f64,
    pub setup_factor: f64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        Self {
            cost_per_instantiation: CostSchedule::Uniform(1.0),
            meta_cost: 0.05,
            setup_factor: 0.01,
        }
    }
}

impl ClockConfig {
    pub fn virtual_clock(&self) -> Result<VirtualClock<f64>> {
        VirtualClock::with_setup_factor(
            self.cost_per_instantiation.clone(),
            self.meta_cost,
            self.setup_factor,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblemSpec {
    pub id: Option<String>,
    pub hypothesis_variable: String,
    pub hypothesis_state: String,
    /// Observed (variable, state) pairs conditioning the hypothesis.
    pub evidence: Vec<(String, String)>,
    pub actions: Vec<ActionSpec>,
    pub criticality_rules: Vec<CriticalityRule<f64>>,
    pub vitals: BTreeMap<String, f64>,
    pub clock: ClockConfig,
}

impl DecisionProblemSpec {
    /// Default utilities keyed by (action, "h1" | "h2").
    pub fn utilities(&self) -> BTreeMap<OutcomeKey, OutcomeUtility<f64>> {
        let mut map = BTreeMap::new();
        for a in &self.actions {
            for (side, u) in [(Side::H1, &a.h1), (Side::H2, &a.h2)] {
                map.insert((a.name.clone(), side.label().to_string()), u.clone());
            }
        }
        map
    }

    pub fn action_names(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.name.clone()).collect()
    }

    /// The uncustomized decision problem.
    pub fn decision_problem(&self) -> Result<DecisionProblem<f64>> {
        DecisionProblem::new(
            self.actions
                .iter()
                .map(|a| ActionUtilities {
                    name: a.name.clone(),
                    h1: a.h1.clone(),
                    h2: a.h2.clone(),
                })
                .collect(),
        )
    }

    /// Resolves the hypothesis and evidence against a network.
    pub fn bind<T: crate::Real>(&self, net: &BeliefNetwork<T>) -> Result<((usize, usize), Evidence)> {
        let var = net.index_of(&self.hypothesis_variable).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "hypothesis variable {} is not in the network",
                self.hypothesis_variable
            ))
        })?;
        let state = net.variable(var).state_index(&self.hypothesis_state).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{} is not a state of {}",
                self.hypothesis_state, self.hypothesis_variable
            ))
        })?;
        let evidence = Evidence::from_names(
            net,
            self.evidence.iter().map(|(v, s)| (v.as_str(), s.as_str())),
        )?;
        if evidence.get(var).is_some() {
            return Err(Error::InvalidEvidence(format!(
                "hypothesis variable {} is observed",
                self.hypothesis_variable
            )));
        }
        Ok(((var, state), evidence))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema: Spanned<i64>,
    #[serde(default)]
    id: Option<String>,
    hypothesis: Hypothesis,
    #[serde(default)]
    evidence: BTreeMap<String, String>,
    #[serde(rename = "action")]
    actions: Spanned<Vec<ActionDoc>>,
    #[serde(default, rename = "rule")]
    rules: Vec<RuleDoc>,
    #[serde(default)]
    vitals: BTreeMap<String, f64>,
    #[serde(default)]
    extra_vitals: Vec<String>,
    #[serde(default)]
    clock: Option<Spanned<ClockDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Hypothesis {
    variable: String,
    state: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionDoc {
    name: Spanned<String>,
    h1: Spanned<UtilityDoc>,
    h2: Spanned<UtilityDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilityDoc {
    u0: f64,
    #[serde(default)]
    decay: Option<DecayDoc>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DecayDoc {
    Constant,
    Exp {
        k: f64,
    },
    Linear {
        c: f64,
        #[serde(default)]
        floor: f64,
    },
    Piecewise {
        segments: Vec<SegmentDoc>,
    },
}

#[derive(Deserialize)]
struct SegmentDoc {
    start: f64,
    #[serde(flatten)]
    law: LawDoc,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LawDoc {
    Constant,
    Exp {
        k: f64,
    },
    Linear {
        c: f64,
        #[serde(default)]
        floor: f64,
    },
}

impl From<LawDoc> for DecayLaw<f64> {
    fn from(d: LawDoc) -> Self {
        match d {
            LawDoc::Constant => DecayLaw::Constant,
            LawDoc::Exp { k } => DecayLaw::Exponential { k },
            LawDoc::Linear { c, floor } => DecayLaw::Linear { c, floor },
        }
    }
}

impl From<UtilityDoc> for OutcomeUtility<f64> {
    fn from(d: UtilityDoc) -> Self {
        let decay = match d.decay {
            None | Some(DecayDoc::Constant) => Decay::Law(DecayLaw::Constant),
            Some(DecayDoc::Exp { k }) => Decay::Law(DecayLaw::Exponential { k }),
            Some(DecayDoc::Linear { c, floor }) => Decay::Law(DecayLaw::Linear { c, floor }),
            Some(DecayDoc::Piecewise { segments }) => Decay::Piecewise(
                segments
                    .into_iter()
                    .map(|s| Segment {
                        start: s.start,
                        law: s.law.into(),
                    })
                    .collect(),
            ),
        };
        OutcomeUtility { u0: d.u0, decay }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    vital: Spanned<String>,
    comparator: Comparator,
    threshold: f64,
    action: Spanned<String>,
    outcome: Spanned<String>,
    parameter: Parameter,
    value: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CostDoc {
    Uniform(f64),
    PerIndex(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClockDoc {
    #[serde(default)]
    cost_per_instantiation: Option<CostDoc>,
    #[serde(default)]
    meta_cost: Option<f64>,
    #[serde(default)]
    setup_factor: Option<f64>,
}

/// Parses a decision problem, applying defaults for omitted decay and clock fields.
pub fn parse_decision_problem(text: &str) -> Result<DecisionProblemSpec> {
    let doc: Document = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let at = |span: Range<usize>, msg: String| -> Error { ParseError::at_offset(text, span.start, msg).into() };

    if *doc.schema.get_ref() != PROBLEM_SCHEMA {
        return Err(at(
            doc.schema.span(),
            format!("unsupported schema version {}, expected {PROBLEM_SCHEMA}", doc.schema.get_ref()),
        ));
    }

    let actions_span = doc.actions.span();
    let mut actions = Vec::new();
    let mut names = BTreeSet::new();
    for a in doc.actions.into_inner() {
        if !names.insert(a.name.get_ref().clone()) {
            return Err(at(a.name.span(), format!("duplicate action {:?}", a.name.get_ref())));
        }
        let side = |u: Spanned<UtilityDoc>| -> Result<OutcomeUtility<f64>> {
            let span = u.span();
            let ou: OutcomeUtility<f64> = u.into_inner().into();
            ou.validate().map_err(|e| at(span, e.to_string()))?;
            Ok(ou)
        };
        actions.push(ActionSpec {
            name: a.name.get_ref().clone(),
            h1: side(a.h1)?,
            h2: side(a.h2)?,
        });
    }
    if actions.len() < 2 {
        return Err(at(
            actions_span,
            format!("a decision problem needs at least two actions, got {}", actions.len()),
        ));
    }

    let known: BTreeSet<&str> = KNOWN_VITALS
        .iter()
        .copied()
        .chain(doc.extra_vitals.iter().map(String::as_str))
        .collect();
    let mut rules = Vec::new();
    for r in doc.rules {
        if !known.contains(r.vital.get_ref().as_str()) {
            return Err(at(r.vital.span(), format!("unknown vital sign {:?}", r.vital.get_ref())));
        }
        if !names.contains(r.action.get_ref()) {
            return Err(at(r.action.span(), format!("unknown action {:?}", r.action.get_ref())));
        }
        let side = Side::from_label(r.outcome.get_ref()).ok_or_else(|| {
            at(
                r.outcome.span(),
                format!("outcome must be \"h1\" or \"h2\", got {:?}", r.outcome.get_ref()),
            )
        })?;
        rules.push(CriticalityRule {
            vital: r.vital.into_inner(),
            comparator: r.comparator,
            threshold: r.threshold,
            target: (r.action.into_inner(), side.label().to_string()),
            parameter: r.parameter,
            new_value: r.value,
        });
    }

    let mut clock = ClockConfig::default();
    if let Some(c) = doc.clock {
        let span = c.span();
        let c = c.into_inner();
        if let Some(cost) = c.cost_per_instantiation {
            clock.cost_per_instantiation = match cost {
                CostDoc::Uniform(x) => CostSchedule::Uniform(x),
                CostDoc::PerIndex(v) if v.is_empty() => {
                    return Err(at(span, "cost_per_instantiation list is empty".into()))
                }
                CostDoc::PerIndex(v) => CostSchedule::PerIndex(v),
            };
        }
        clock.meta_cost = c.meta_cost.unwrap_or(clock.meta_cost);
        clock.setup_factor = c.setup_factor.unwrap_or(clock.setup_factor);
        clock.virtual_clock().map_err(|e| at(span, e.to_string()))?;
    }

    Ok(DecisionProblemSpec {
        id: doc.id,
        hypothesis_variable: doc.hypothesis.variable,
        hypothesis_state: doc.hypothesis.state,
        evidence: doc.evidence.into_iter().collect(),
        actions,
        criticality_rules: rules,
        vitals: doc.vitals,
        clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema = 1
id = "two-by-two"

[hypothesis]
variable = "D"
state = "1"

[[action]]
name = "treat"
h1 = { u0 = 1.0, decay = { kind = "exp", k = 0.001 } }
h2 = { u0 = 0.3, decay = { kind = "exp", k = 0.002 } }

[[action]]
name = "wait"
h1 = { u0 = 0.6, decay = { kind = "exp", k = 0.003 } }
h2 = { u0 = 0.9, decay = { kind = "exp", k = 0.004 } }
"#;

    fn err_line(text: &str) -> (usize, String) {
        match parse_decision_problem(text) {
            Err(Error::Parse(e)) => (e.line, e.message),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn four_exponential_utilities() {
        let spec = parse_decision_problem(BASE).unwrap();
        let u = spec.utilities();
        assert_eq!(u.len(), 4);
        assert_eq!(
            u[&("wait".to_string(), "h2".to_string())],
            OutcomeUtility::exponential(0.9, 0.004)
        );
        assert_eq!(spec.clock, ClockConfig::default());
        assert_eq!(spec.id.as_deref(), Some("two-by-two"));
    }

    #[test]
    fn omitted_decay_is_constant() {
        let text = BASE.replace("h2 = { u0 = 0.3, decay = { kind = \"exp\", k = 0.002 } }", "h2 = { u0 = 0.3 }");
        let spec = parse_decision_problem(&text).unwrap();
        assert_eq!(spec.actions[0].h2, OutcomeUtility::constant(0.3));
    }

    #[test]
    fn linear_floor_defaults_to_zero_and_piecewise_parses() {
        let text = BASE
            .replace(
                "{ kind = \"exp\", k = 0.003 }",
                "{ kind = \"linear\", c = 0.01 }",
            )
            .replace(
                "{ kind = \"exp\", k = 0.004 }",
                "{ kind = \"piecewise\", segments = [{ start = 0.0, kind = \"constant\" }, { start = 30.0, kind = \"exp\", k = 0.01 }] }",
            );
        let spec = parse_decision_problem(&text).unwrap();
        assert_eq!(spec.actions[1].h1, OutcomeUtility::linear(0.6, 0.01, 0.0));
        match &spec.actions[1].h2.decay {
            Decay::Piecewise(s) => {
                assert_eq!(s.len(), 2);
                assert_eq!(s[1].law, DecayLaw::Exponential { k: 0.01 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn blood_pressure_rule() {
        let text = format!(
            "{BASE}\n[[rule]]\nvital = \"systolicBP\"\ncomparator = \"<\"\nthreshold = 90.0\naction = \"treat\"\noutcome = \"h1\"\nparameter = \"k\"\nvalue = 0.008\n\n[vitals]\nsystolicBP = 85.0\n"
        );
        let spec = parse_decision_problem(&text).unwrap();
        let r = &spec.criticality_rules[0];
        assert_eq!(r.comparator, Comparator::Lt);
        assert_eq!(r.threshold, 90.0);
        assert_eq!(r.target, ("treat".to_string(), "h1".to_string()));
        assert_eq!(r.parameter, Parameter::K);
        assert_eq!(r.new_value, 0.008);
        assert_eq!(spec.vitals["systolicBP"], 85.0);
    }

    #[test]
    fn unknown_vital_is_positioned() {
        let rule = "\n[[rule]]\nvital = \"mood\"\ncomparator = \">=\"\nthreshold = 1.0\naction = \"wait\"\noutcome = \"h2\"\nparameter = \"u0\"\nvalue = 0.5\n";
        let text = format!("{BASE}{rule}");
        let (line, msg) = err_line(&text);
        assert!(msg.contains("mood"));
        assert_eq!(line, BASE.lines().count() + 3);
        let declared = format!("extra_vitals = [\"mood\"]\n{BASE}{rule}");
        assert!(parse_decision_problem(&declared).is_ok());
    }

    #[test]
    fn missing_outcome_and_unknown_decay() {
        let (_, msg) = err_line(&BASE.replace("h2 = { u0 = 0.9, decay = { kind = \"exp\", k = 0.004 } }\n", ""));
        assert!(msg.contains("h2"), "{msg}");
        let (line, msg) = err_line(&BASE.replace("kind = \"exp\", k = 0.001", "kind = \"hyperbolic\", k = 0.001"));
        assert!(msg.contains("hyperbolic"), "{msg}");
        assert_eq!(line, 11);
    }

    #[test]
    fn clock_section() {
        let text = format!("{BASE}\n[clock]\ncost_per_instantiation = [2.0, 1.0]\nmeta_cost = 0.5\n");
        let spec = parse_decision_problem(&text).unwrap();
        assert_eq!(spec.clock.cost_per_instantiation, CostSchedule::PerIndex(vec![2.0, 1.0]));
        assert_eq!(spec.clock.meta_cost, 0.5);
        assert_eq!(spec.clock.setup_factor, 0.01);
        let bad = format!("{BASE}\n[clock]\nmeta_cost = -1.0\n");
        assert!(parse_decision_problem(&bad).is_err());
    }

    #[test]
    fn needs_two_actions() {
        let one = BASE.split("[[action]]\nname = \"wait\"").next().unwrap();
        assert!(err_line(one).1.contains("two actions"));
    }

    #[test]
    fn bind_aggregates_against_network() {
        let spec = parse_decision_problem(&BASE.replace("variable = \"D\"", "variable = \"A\"")).unwrap();
        let net = crate::network::fixtures::diamond();
        let (q, e) = spec.bind(&net).unwrap();
        assert_eq!(q, (0, 1));
        assert!(e.is_empty());
        assert!(parse_decision_problem(BASE).unwrap().bind(&net).is_ok());
        let bad = parse_decision_problem(&BASE.replace("variable = \"D\"", "variable = \"Z\"")).unwrap();
        assert!(bad.bind(&net).is_err());
    }
}
