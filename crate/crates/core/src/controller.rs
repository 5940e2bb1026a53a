//! The run loop and its trace.
//!
//! Each cycle evaluates the control rule at the current virtual time, writes
//! one [`TraceRecord`], and either performs one more conditioning step or
//! stops. Utilities are customized from the case's vital signs once, before
//! the first cycle.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conditioning::{InferenceSession, ProbabilityBounds, DEFAULT_INSTANTIATION_CAP};
use crate::decision::{
    act_at_mean, expected_utility, threshold_pstar, DecisionProblem, Side,
};
use crate::elimination::{evidence_probability, posterior};
use crate::error::{Error, Result};
use crate::io::{format_number, ClockConfig, DecisionProblemSpec};
use crate::meta::{step_decision, ControlDecision, HaltReason, Policy};
use crate::network::BeliefNetwork;
use crate::utility::{customize, CustomizationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Halted by nonpositive EVC before any inference step.
    Reflex,
    Continue,
    HaltEvc,
    Dominant,
    Exhausted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Reflex => "reflex",
            Status::Continue => "continue",
            Status::HaltEvc => "halt-evc",
            Status::Dominant => "dominant",
            Status::Exhausted => "exhausted",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Status::Reflex,
            Status::Continue,
            Status::HaltEvc,
            Status::Dominant,
            Status::Exhausted,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown status {s:?}")))
    }
}

/// One metareasoning evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Conditioning steps completed before this evaluation.
    pub step: usize,
    /// Virtual time at which the evaluation started.
    pub vtime: f64,
    pub lb: f64,
    pub ub: f64,
    pub mean: f64,
    pub pstar: Option<f64>,
    /// Absent when the policy never computes EVC or the decision was settled first.
    pub evc: Option<f64>,
    pub candidate_action: String,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub policy: Policy,
    pub instantiation_cap: usize,
    /// Replaces the problem's own clock settings when set.
    pub clock: Option<ClockConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            policy: Policy::Myopic,
            instantiation_cap: DEFAULT_INSTANTIATION_CAP,
            clock: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub recommendation: String,
    pub recommendation_index: usize,
    /// Status of the final record.
    pub halt_reason: Status,
    /// Conditioning steps completed at halt.
    pub halt_step: usize,
    pub halt_vtime: f64,
    pub final_bounds: ProbabilityBounds<f64>,
    /// p(H₁ | E) from the exact subsolver, computed after the run ended.
    pub exact_posterior: Option<f64>,
    pub schedule_len: usize,
    pub trace: Vec<TraceRecord>,
    /// Utilities after criticality customization.
    pub problem: DecisionProblem<f64>,
    pub customization: CustomizationReport,
}

/// Applies the problem's criticality rules to its default utilities.
pub fn customized_problem(
    spec: &DecisionProblemSpec,
) -> Result<(DecisionProblem<f64>, CustomizationReport)> {
    let (utilities, report) = customize(&spec.utilities(), &spec.criticality_rules, &spec.vitals);
    let dp = DecisionProblem::from_map(&spec.action_names(), &utilities)?;
    Ok((dp, report))
}

/// Threshold between the best action at `p` and its strongest rival there.
fn pstar_near<T: crate::Real>(dp: &DecisionProblem<T>, p: T, t: T) -> Option<T> {
    let mut order: Vec<usize> = (0..dp.len()).collect();
    let eu: Vec<T> = order.iter().map(|&i| expected_utility(dp, i, p, t)).collect();
    order.sort_by(|&a, &b| eu[b].partial_cmp(&eu[a]).unwrap().then(a.cmp(&b)));
    threshold_pstar(dp, (order[0], order[1]), t).p_star()
}

pub fn run_case(
    net: &BeliefNetwork<f64>,
    spec: &DecisionProblemSpec,
    config: &RunConfig,
) -> Result<RunResult> {
    let (dp, customization) = customized_problem(spec)?;
    let (query, evidence) = spec.bind(net)?;
    if !(evidence_probability(net, &evidence) > 0.0) {
        return Err(Error::ZeroEvidence);
    }
    let clock_config = config.clock.as_ref().unwrap_or(&spec.clock);
    let clock = clock_config.virtual_clock()?;
    let min_step = match &clock_config.cost_per_instantiation {
        crate::CostSchedule::Uniform(c) => *c,
        crate::CostSchedule::PerIndex(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let meta = match config.policy {
        Policy::DominanceOnly => 0.0,
        _ => clock_config.meta_cost,
    };
    if !(min_step + meta > 0.0) {
        return Err(Error::InvalidArgument(
            "each cycle must cost virtual time: need a positive instantiation or meta cost".into(),
        ));
    }

    let mut session =
        InferenceSession::with_cap(net, evidence.clone(), query, clock, config.instantiation_cap)?;
    let mut trace = Vec::new();
    let (action, status) = loop {
        let t = session.clock.now();
        let bounds = session.bounds();
        let step = session.cursor();
        let outcome = step_decision(&dp, &mut session, t, config.policy)?;
        let (status, action) = match outcome.decision {
            ControlDecision::Continue => (Status::Continue, act_at_mean(&dp, &bounds, t)),
            ControlDecision::Dominant(a) => (Status::Dominant, a),
            ControlDecision::Halt {
                action,
                reason: HaltReason::Exhausted,
            } => (Status::Exhausted, action),
            ControlDecision::Halt { action, .. } if step == 0 => (Status::Reflex, action),
            ControlDecision::Halt { action, .. } => (Status::HaltEvc, action),
        };
        trace.push(TraceRecord {
            step,
            vtime: t,
            lb: bounds.lb,
            ub: bounds.ub,
            mean: bounds.mean(),
            pstar: pstar_near(&dp, bounds.mean(), t),
            evc: outcome.evc.map(|r| r.evc),
            candidate_action: dp.name(action).to_string(),
            status,
        });
        if status != Status::Continue {
            break (action, status);
        }
        session.refine_step()?;
    };
    if status == Status::Exhausted && !(session.evidence_mass() > 0.0) {
        return Err(Error::ZeroEvidence);
    }

    let last = trace.last().expect("at least one record");
    let exact_posterior = if session.is_exhausted() {
        Some(session.bounds().lb)
    } else {
        Some(posterior(net, query, &evidence)?)
    };
    Ok(RunResult {
        recommendation: dp.name(action).to_string(),
        recommendation_index: action,
        halt_reason: status,
        halt_step: last.step,
        halt_vtime: last.vtime,
        final_bounds: session.bounds(),
        exact_posterior,
        schedule_len: session.schedule().len(),
        trace,
        problem: dp,
        customization,
    })
}

pub fn emit_plot_data(result: &RunResult) -> String {
    plot_tables(&result.trace, &result.problem)
}

const PROBABILITY_GRID: usize = 100;
const TIME_GRID: usize = 100;

/// The three plot tables for a recorded run, whitespace separated.
///
/// 1. the bounds and threshold per record;
/// 2. every outcome utility on a time grid from onset to twice the halt time;
/// 3. every action's expected utility against p at onset and at halt, with
///    the halt-time threshold inserted into the grid.
pub fn plot_tables(records: &[TraceRecord], dp: &DecisionProblem<f64>) -> String {
    let num = |x: f64| format_number(x);
    let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), format_number);
    let mut out = String::new();

    out.push_str("# table 1: bounds and threshold by virtual time\n# vtime lb ub pstar\n");
    for r in records {
        let _ = writeln!(out, "{} {} {} {}", num(r.vtime), num(r.lb), num(r.ub), opt(r.pstar));
    }

    let halt = records.last().map_or(0.0, |r| r.vtime);
    let horizon = if halt > 0.0 { 2.0 * halt } else { 1.0 };
    out.push_str("\n# table 2: outcome utilities by virtual time\n# vtime");
    for a in dp.actions() {
        let _ = write!(out, " u[{},h1] u[{},h2]", a.name, a.name);
    }
    out.push('\n');
    for i in 0..=TIME_GRID {
        let t = horizon * i as f64 / TIME_GRID as f64;
        let _ = write!(out, "{}", num(t));
        for a in 0..dp.len() {
            for side in [Side::H1, Side::H2] {
                let _ = write!(out, " {}", num(dp.utility(a, side, t)));
            }
        }
        out.push('\n');
    }

    let (lb, ub, mean) = records.last().map_or((0.0, 1.0, 0.5), |r| (r.lb, r.ub, r.mean));
    let pstar = pstar_near(dp, mean, halt);
    let _ = writeln!(
        out,
        "\n# table 3: expected utility by probability at t0 = 0 and at halt t = {}",
        num(halt)
    );
    let _ = writeln!(
        out,
        "# markers: lb = {} ub = {} mean = {} pstar = {}",
        num(lb),
        num(ub),
        num(mean),
        opt(pstar)
    );
    out.push_str("# p");
    for a in dp.actions() {
        let _ = write!(out, " eu[{}](t0)", a.name);
    }
    for a in dp.actions() {
        let _ = write!(out, " eu[{}](halt)", a.name);
    }
    out.push('\n');
    let mut grid: Vec<f64> = (0..=PROBABILITY_GRID)
        .map(|i| i as f64 / PROBABILITY_GRID as f64)
        .collect();
    if let Some(p) = pstar {
        if !grid.contains(&p) {
            grid.push(p);
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
    }
    for p in grid {
        let _ = write!(out, "{}", num(p));
        for t in [0.0, halt] {
            for a in 0..dp.len() {
                let _ = write!(out, " {}", num(expected_utility(dp, a, p, t)));
            }
        }
        out.push('\n');
    }
    out
}
