//! Run traces as CSV or JSON.
//!
//! CSV starts with `# key = value` header lines, then the column row
//! `step,vtime,lb,ub,mean,pstar,evc,candidate_action,status`, then one row
//! per record. Reals are written in fixed decimal with 12 significant
//! digits; an absent p* or EVC is an empty field. JSON mirrors the same
//! fields at full precision.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::controller::{Status, TraceRecord};
use crate::error::{Error, ParseError, Result};

pub const CSV_COLUMNS: [&str; 9] = [
    "step",
    "vtime",
    "lb",
    "ub",
    "mean",
    "pstar",
    "evc",
    "candidate_action",
    "status",
];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceHeader {
    pub network_id: String,
    pub problem_id: String,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl TraceFile {
    /// Checks that virtual time increases strictly from record to record.
    pub fn validate(&self) -> Result<()> {
        for pair in self.records.windows(2) {
            if !(pair[1].vtime > pair[0].vtime) {
                return Err(Error::InvalidArgument(format!(
                    "trace vtime not strictly increasing at step {} ({} then {})",
                    pair[1].step, pair[0].vtime, pair[1].vtime
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

/// Fixed-decimal rendering with 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (11 - exponent).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    // a value that rounds up to the next power of ten gains one digit; drop it
    let digits = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|c| *c == '0')
        .count();
    if digits > 12 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn write_trace(trace: &TraceFile, format: TraceFormat) -> String {
    match format {
        TraceFormat::Json => {
            let mut s = serde_json::to_string_pretty(trace).expect("trace serializes");
            s.push('\n');
            s
        }
        TraceFormat::Csv => {
            let h = &trace.header;
            let mut out = String::new();
            let _ = writeln!(out, "# network = {}", h.network_id);
            let _ = writeln!(out, "# problem = {}", h.problem_id);
            let _ = writeln!(out, "# policy = {}", h.policy);
            if let Some(seed) = h.seed {
                let _ = writeln!(out, "# seed = {seed}");
            }
            let _ = writeln!(out, "{}", CSV_COLUMNS.join(","));
            for r in &trace.records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.step,
                    format_number(r.vtime),
                    format_number(r.lb),
                    format_number(r.ub),
                    format_number(r.mean),
                    opt(r.pstar),
                    opt(r.evc),
                    r.candidate_action,
                    r.status
                );
            }
            out
        }
    }
}

/// Reads either format; JSON is recognized by a leading `{`.
pub fn read_trace(text: &str) -> Result<TraceFile> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| {
            ParseError::new(e.line(), e.column(), e.to_string()).into()
        });
    }
    let mut header = TraceHeader::default();
    let mut records = Vec::new();
    let mut saw_columns = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |msg: String| -> Error { ParseError::new(lineno, 1, msg).into() };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| err(format!("malformed header line {line:?}")))?;
            let v = v.trim().to_string();
            match k.trim() {
                "network" => header.network_id = v,
                "problem" => header.problem_id = v,
                "policy" => header.policy = v,
                "seed" => header.seed = Some(v.parse().map_err(|_| err(format!("bad seed {v:?}")))?),
                _ => {}
            }
            continue;
        }
        if !saw_columns {
            if line.split(',').ne(CSV_COLUMNS.iter().copied()) {
                return Err(err(format!("expected column row {:?}", CSV_COLUMNS.join(","))));
            }
            saw_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CSV_COLUMNS.len() {
            return Err(err(format!("expected 9 fields, found {}", fields.len())));
        }
        let real = |k: usize| -> Result<f64> {
            fields[k]
                .parse()
                .map_err(|_| err(format!("{}: not a number: {:?}", CSV_COLUMNS[k], fields[k])))
        };
        let optional = |k: usize| -> Result<Option<f64>> {
            if fields[k].is_empty() { Ok(None) } else { real(k).map(Some) }
        };
        records.push(TraceRecord {
            step: fields[0]
                .parse()
                .map_err(|_| err(format!("step: not a count: {:?}", fields[0])))?,
            vtime: real(1)?,
            lb: real(2)?,
            ub: real(3)?,
            mean: real(4)?,
            pstar: optional(5)?,
            evc: optional(6)?,
            candidate_action: fields[7].to_string(),
            status: fields[8]
                .parse::<Status>()
                .map_err(|_| err(format!("unknown status {:?}", fields[8])))?,
        });
    }
    if !saw_columns {
        return Err(ParseError::new(text.lines().count().max(1), 1, "missing column row").into());
    }
    Ok(TraceFile { header, records })
}
