//! Text formats: native networks, the BIF subset, decision problems and traces.
//!
//! Parsers return networks and problems in `f64`; use
//! [`BeliefNetwork::cast`](crate::network::BeliefNetwork::cast) for other precisions.

mod bif;
mod native;
mod problem;
mod trace;

pub use bif::{parse_bif_subset, parse_bif_with_warnings};
pub use native::{parse_network_text, parse_network_unchecked, serialize_network, NATIVE_SCHEMA};
pub use problem::{
    parse_decision_problem, ActionSpec, ClockConfig, DecisionProblemSpec, KNOWN_VITALS,
    PROBLEM_SCHEMA,
};
pub use trace::{format_number, read_trace, write_trace, TraceFile, TraceFormat, TraceHeader, CSV_COLUMNS};

use crate::error::ParseError;

/// Maps a toml deserialization error onto a positioned diagnostic.
pub(crate) fn toml_error(text: &str, err: toml::de::Error) -> ParseError {
    let offset = err.span().map_or(0, |s| s.start);
    ParseError::at_offset(text, offset, err.message().trim().to_string())
}
