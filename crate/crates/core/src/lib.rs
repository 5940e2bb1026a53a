//! Resource-bounded decisions under time-dependent utility.
//!
//! Bounded conditioning narrows an interval on p(H₁ | E) one cutset
//! instantiation at a time on a virtual clock. Between steps a metareasoner
//! weighs the expected value of a tighter interval against the utility lost
//! to delay, and stops when further computation is not worth it or when one
//! action is optimal over the whole interval.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the working precision used by the file formats and the CLI.

pub mod clock;
pub mod conditioning;
pub mod controller;
pub mod decision;
pub mod elimination;
pub mod error;
pub mod io;
pub mod meta;
pub mod network;
pub mod scalar;
pub mod utility;

pub use clock::{CostSchedule, VirtualClock};
pub use conditioning::{solve_conditioned, CutsetInstantiation, InferenceSession, ProbabilityBounds};
pub use controller::{
    customized_problem, emit_plot_data, plot_tables, run_case, RunConfig, RunResult, Status,
    TraceRecord,
};

pub use decision::{
    act_at_mean, check_dominance, expected_utility, threshold_pstar, ActionUtilities,
    DecisionProblem, Side, Threshold, ThresholdReport,
};
pub use error::{Error, ParseError, Result};
pub use io::{
    parse_bif_subset, parse_decision_problem, parse_network_text, read_trace, serialize_network,
    write_trace, DecisionProblemSpec, TraceFile, TraceFormat,
};
pub use meta::{
    evc_bc, evc_lookahead, evc_myopic, predict_bounds, step_decision, ControlDecision, EvcReport,
    HaltReason, Policy, RefinementPrediction,
};
pub use network::{BeliefNetwork, Evidence, ValidationReport, Variable};
pub use scalar::Real;
pub use utility::{
    customize, fit_decay, lottery_loss, micromorts_to_dollars, CriticalityRule, Decay, DecayForm,
    DecayLaw, LotteryAssessment, OutcomeUtility,
};

pub type Network = BeliefNetwork<f64>;
pub type Network32 = BeliefNetwork<f32>;
pub type Session<'a> = InferenceSession<'a, f64>;
pub type Session32<'a> = InferenceSession<'a, f32>;
pub type Bounds = ProbabilityBounds<f64>;
pub type Problem = DecisionProblem<f64>;
pub type Utility = OutcomeUtility<f64>;
pub type Clock = VirtualClock<f64>;
