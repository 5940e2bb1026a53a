//! Time-dependent utility.
//!
//! Utilities are nonnegative and micromort-denominated: an outcome worth `u0`
//! when acted on at the onset of the challenge loses value with delay
//! according to its decay law, and never drops below zero.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probability of death represented by one micromort.
pub const MICROMORT: f64 = 1e-6;

/// Decay law applied from an anchor value over elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayLaw<T> {
    Constant,
    Exponential { k: T },
    Linear { c: T, floor: T },
}

impl<T: Real> DecayLaw<T> {
    fn apply(&self, anchor: T, dt: T) -> T {
        match *self {
            DecayLaw::Constant => anchor,
            DecayLaw::Exponential { k } => anchor * (-k * dt).exp(),
            DecayLaw::Linear { c, floor } => (anchor - c * dt).max(floor.min(anchor)),
        }
    }

    fn flux(&self, value: T, floor_reached: bool) -> T {
        match *self {
            DecayLaw::Constant => T::zero(),
            DecayLaw::Exponential { k } => k * value,
            DecayLaw::Linear { c, .. } if !floor_reached => c,
            DecayLaw::Linear { .. } => T::zero(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |name: &str, x: T| {
            Err(Error::InvalidArgument(format!(
                "decay parameter {name} must be finite and nonnegative, got {x}"
            )))
        };
        match *self {
            DecayLaw::Constant => Ok(()),
            DecayLaw::Exponential { k } if !(k >= T::zero() && k.is_finite()) => bad("k", k),
            DecayLaw::Linear { c, .. } if !(c >= T::zero() && c.is_finite()) => bad("c", c),
            DecayLaw::Linear { floor, .. } if !(floor >= T::zero() && floor.is_finite()) => {
                bad("floor", floor)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    pub start: T,
    pub law: DecayLaw<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decay<T> {
    Law(DecayLaw<T>),
    /// Chained laws; each segment continues from the value reached at its start.
    Piecewise(Vec<Segment<T>>),
}

impl<T> Default for Decay<T> {
    fn default() -> Self {
        Decay::Law(DecayLaw::Constant)
    }
}

/// u(AᵢHⱼ, t): initial utility plus decay.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeUtility<T> {
    pub u0: T,
    pub decay: Decay<T>,
}

impl<T: Real> OutcomeUtility<T> {
    pub fn constant(u0: T) -> Self {
        Self {
            u0,
            decay: Decay::default(),
        }
    }

    pub fn exponential(u0: T, k: T) -> Self {
        Self {
            u0,
            decay: Decay::Law(DecayLaw::Exponential { k }),
        }
    }

    pub fn linear(u0: T, c: T, floor: T) -> Self {
        Self {
            u0,
            decay: Decay::Law(DecayLaw::Linear { c, floor }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0 >= T::zero() && self.u0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "u0 must be finite and nonnegative, got {}",
                self.u0
            )));
        }
        match &self.decay {
            Decay::Law(law) => law.validate(),
            Decay::Piecewise(segments) => {
                let first = segments.first().ok_or_else(|| {
                    Error::InvalidArgument("piecewise decay needs at least one segment".into())
                })?;
                if first.start != T::zero() {
                    return Err(Error::InvalidArgument(
                        "first piecewise segment must start at t = 0".into(),
                    ));
                }
                for pair in segments.windows(2) {
                    if !(pair[1].start > pair[0].start) {
                        return Err(Error::InvalidArgument(format!(
                            "segment starts must increase strictly ({} then {})",
                            pair[0].start, pair[1].start
                        )));
                    }
                }
                segments.iter().try_for_each(|s| s.law.validate())
            }
        }
    }

    /// Utility of acting at time `t` (seconds since onset).
    pub fn utility_at(&self, t: T) -> Result<T> {
        if t < T::zero() || t.is_nan() {
            return Err(Error::NegativeTime(t.as_f64()));
        }
        Ok(self.eval(t).0.max(T::zero()))
    }

    /// Micromort flux −du/dt at `t` (right derivative).
    pub fn flux_at(&self, t: T) -> Result<T> {
        if t < T::zero() || t.is_nan() {
            return Err(Error::NegativeTime(t.as_f64()));
        }
        let (value, law, floor_reached) = self.eval(t);
        Ok(law.map_or(T::zero(), |l| l.flux(value, floor_reached)))
    }

    fn eval(&self, t: T) -> (T, Option<&DecayLaw<T>>, bool) {
        let at_floor = |law: &DecayLaw<T>, anchor: T, v: T| match *law {
            DecayLaw::Linear { floor, .. } => v <= floor.min(anchor),
            _ => false,
        };
        match &self.decay {
            Decay::Law(law) => {
                let v = law.apply(self.u0, t);
                (v, Some(law), at_floor(law, self.u0, v))
            }
            Decay::Piecewise(segments) => {
                let mut anchor = self.u0;
                for (i, seg) in segments.iter().enumerate() {
                    let end = segments.get(i + 1).map(|s| s.start);
                    match end {
                        Some(end) if t >= end => anchor = seg.law.apply(anchor, end - seg.start),
                        _ => {
                            let v = seg.law.apply(anchor, t - seg.start);
                            return (v, Some(&seg.law), at_floor(&seg.law, anchor, v));
                        }
                    }
                }
                (anchor, None, false)
            }
        }
    }
}

/// Indifference probabilities of instant death for treatment at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct LotteryAssessment<T> {
    points: Vec<(T, T)>,
}

impl<T: Real> LotteryAssessment<T> {
    /// Points are (t seconds, p death); t strictly increasing from ≥ 0, p in [0, 1] nondecreasing.
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        for &(t, p) in &points {
            if !(t >= T::zero()) || !t.is_finite() {
                return Err(Error::InvalidArgument(format!("assessment time {t} invalid")));
            }
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
            }
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidArgument(
                    "assessment times must increase strictly".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidArgument(
                    "death probability must not decrease with delay".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Linearly interpolated indifference probability at `t`.
    pub fn p_death(&self, t: T) -> Result<T> {
        let (lo, hi) = match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(Error::InvalidArgument("empty assessment".into())),
        };
        if t < lo || t > hi || t.is_nan() {
            return Err(Error::OutOfAssessedRange {
                t: t.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        let i = self.points.partition_point(|&(ti, _)| ti <= t);
        if i == 0 {
            return Ok(self.points[0].1);
        }
        let (t0, p0) = self.points[i - 1];
        if t0 == t || i == self.points.len() {
            return Ok(p0);
        }
        let (t1, p1) = self.points[i];
        Ok(p0 + (p1 - p0) * (t - t0) / (t1 - t0))
    }
}

/// Loss from delaying action from `t` to `t_later`, in micromorts.
pub fn lottery_loss<T: Real>(a: &LotteryAssessment<T>, t: T, t_later: T) -> Result<T> {
    if t > t_later {
        return Err(Error::InvalidArgument(format!(
            "loss needs t ≤ t′, got {t} > {t_later}"
        )));
    }
    Ok((a.p_death(t_later)? - a.p_death(t)?) / T::lit(MICROMORT))
}

/// Worth-numeraire conversion. `dollars_per_micromort` must be nonnegative.
pub fn micromorts_to_dollars<T: Real>(micromorts: T, dollars_per_micromort: T) -> T {
    debug_assert!(dollars_per_micromort >= T::zero());
    micromorts * dollars_per_micromort
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayForm {
    Exp,
    Linear,
}

/// Fits a decay law to lottery assessments.
///
/// Samples are u(t) = u0 − loss(t_first → t). The exponential fit is least
/// squares on ln(u/u0) against elapsed time, the linear fit least squares on
/// u − u0, both anchored at u0 on the first assessed time.
pub fn fit_decay<T: Real>(
    a: &LotteryAssessment<T>,
    u0: T,
    form: DecayForm,
) -> Result<OutcomeUtility<T>> {
    let pts = a.points();
    if pts.len() < 2 {
        return Err(Error::Fit("need at least two assessment points".into()));
    }
    let t_first = pts[0].0;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(t, _) in pts {
        let u = u0 - lottery_loss(a, t_first, t)?;
        let x = t - t_first;
        let y = match form {
            DecayForm::Exp => {
                if !(u > T::zero()) {
                    return Err(Error::Fit(format!(
                        "nonpositive utility sample {u} at t = {t} under exponential form"
                    )));
                }
                (u / u0).ln()
            }
            DecayForm::Linear => u - u0,
        };
        sxx += x * x;
        sxy += x * y;
    }
    if sxx == T::zero() {
        return Err(Error::Fit("degenerate assessment: all times equal".into()));
    }
    let rate = (-sxy / sxx).max(T::zero());
    Ok(match form {
        DecayForm::Exp => OutcomeUtility::exponential(u0, rate),
        DecayForm::Linear => OutcomeUtility::linear(u0, rate, T::zero()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
}

impl Comparator {
    pub fn holds<T: Real>(self, value: T, threshold: T) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Le => value <= threshold,
            Comparator::Gt => value > threshold,
            Comparator::Ge => value >= threshold,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    K,
    C,
    U0,
}

/// (action name, hypothesis label) identifying one outcome.
pub type OutcomeKey = (String, String);

/// Sets one decay parameter of one outcome when a vital sign crosses a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityRule<T> {
    pub vital: String,
    pub comparator: Comparator,
    pub threshold: T,
    pub target: OutcomeKey,
    pub parameter: Parameter,
    pub new_value: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleOutcome {
    Applied,
    ConditionFalse,
    VitalNotObserved,
    UnknownTarget,
    NotApplicable(String),
}

/// Per-rule record of what [`customize`] did, in rule order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CustomizationReport {
    pub outcomes: Vec<RuleOutcome>,
}

impl CustomizationReport {
    pub fn applied(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| **o == RuleOutcome::Applied)
            .count()
    }
}

/// Applies criticality rules, in order, to a copy of the default utilities.
///
/// Setting `k` makes the outcome decay exponentially at that rate; setting
/// `c` makes it decay linearly (keeping an existing floor); setting `u0`
/// replaces the initial utility. Rules whose vital sign was not observed
/// leave the default model untouched.
pub fn customize<T: Real>(
    utilities: &BTreeMap<OutcomeKey, OutcomeUtility<T>>,
    rules: &[CriticalityRule<T>],
    vitals: &BTreeMap<String, T>,
) -> (BTreeMap<OutcomeKey, OutcomeUtility<T>>, CustomizationReport) {
    let mut out = utilities.clone();
    let mut report = CustomizationReport::default();
    for rule in rules {
        let outcome = match vitals.get(&rule.vital) {
            None => RuleOutcome::VitalNotObserved,
            Some(&v) if !rule.comparator.holds(v, rule.threshold) => RuleOutcome::ConditionFalse,
            Some(_) => match out.get_mut(&rule.target) {
                None => RuleOutcome::UnknownTarget,
                Some(ou) => apply_parameter(ou, rule.parameter, rule.new_value),
            },
        };
        report.outcomes.push(outcome);
    }
    (out, report)
}

fn apply_parameter<T: Real>(ou: &mut OutcomeUtility<T>, parameter: Parameter, value: T) -> RuleOutcome {
    if !(value >= T::zero() && value.is_finite()) {
        return RuleOutcome::NotApplicable(format!("value {value} is not a nonnegative number"));
    }
    match (parameter, &mut ou.decay) {
        (Parameter::U0, _) => ou.u0 = value,
        (_, Decay::Piecewise(_)) => {
            return RuleOutcome::NotApplicable("piecewise decay has no single rate".into())
        }
        (Parameter::K, Decay::Law(law)) => *law = DecayLaw::Exponential { k: value },
        (Parameter::C, Decay::Law(law)) => {
            let floor = match *law {
                DecayLaw::Linear { floor, .. } => floor,
                _ => T::zero(),
            };
            *law = DecayLaw::Linear { c: value, floor };
        }
    }
    RuleOutcome::Applied
}
