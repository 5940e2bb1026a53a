//! Metareasoning: should inference continue, or is it time to act?
//!
//! The value of one more increment of bounded conditioning is estimated from
//! the current interval read as a uniform distribution. With current bounds
//! [l, u], width w and midpoint m, and Δ the virtual time the increment costs
//! (inference plus this analysis), let w′ be the predicted width afterwards
//! and λ = 1 − w′/w the fraction of uncertainty it is expected to resolve:
//!
//! ```text
//! act now     = maxᵢ eu(Aᵢ, m, t)
//! informed    = E_{p ~ U(l, u)} maxᵢ eu(Aᵢ, p, t + Δ)
//! delayed     = maxᵢ eu(Aᵢ, m, t + Δ)
//! EVC         = λ·informed + (1 − λ)·delayed − act now
//! ```
//!
//! Computation stops once EVC is zero or negative.

use std::fmt;
use std::str::FromStr;

use crate::conditioning::{InferenceSession, ProbabilityBounds};
use crate::decision::{
    act_at_mean, best_expected_utility, check_dominance, expected_best_uniform, DecisionProblem,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementPrediction<T> {
    pub horizon: usize,
    pub predicted_lb: T,
    pub predicted_ub: T,
    pub predicted_width: T,
}

/// Predicts the interval after `h` more steps.
///
/// Prior masses of the upcoming instantiations are known exactly; their
/// evidence masses are assumed proportional to prior mass at the ratio seen
/// so far (B / processed prior, or 1 before any step), and their query mass
/// proportional to evidence mass at the current point estimate.
pub fn predict_bounds<T: Real>(
    session: &InferenceSession<'_, T>,
    h: usize,
) -> Result<RefinementPrediction<T>> {
    let remaining = session.remaining_steps();
    if h == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if h > remaining {
        return Err(Error::HorizonTooLong {
            requested: h,
            remaining,
        });
    }
    let current = session.bounds();
    let a = session.query_mass();
    let b = session.evidence_mass();
    let processed = session.processed_mass();
    let ratio = if processed > T::zero() { b / processed } else { T::one() };
    let point = if b > T::zero() { a / b } else { current.mean() };

    let step_mass: T = session.upcoming_masses(h).sum();
    let rest = if h == remaining {
        T::zero()
    } else {
        (session.remaining_mass() - step_mass).max(T::zero())
    };
    let b_hat = b + step_mass * ratio;
    let a_hat = a + step_mass * ratio * point;
    let denom = b_hat + rest;
    if !(denom > T::zero()) {
        return Ok(RefinementPrediction {
            horizon: h,
            predicted_lb: current.lb,
            predicted_ub: current.ub,
            predicted_width: current.width(),
        });
    }
    let lb = (a_hat / denom).max(T::zero()).min(T::one());
    let width = (rest / denom).min(current.width());
    let ub = (lb + width).min(T::one());
    Ok(RefinementPrediction {
        horizon: h,
        predicted_lb: lb,
        predicted_ub: ub,
        predicted_width: width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvcReport<T> {
    pub evc: T,
    pub horizon: usize,
    pub act_now_eu: T,
    pub informed_eu: T,
    pub delayed_mean_eu: T,
    /// λ: predicted fraction of the interval width resolved.
    pub resolved_fraction: T,
    /// Virtual seconds between acting now and acting after the increment.
    pub delay: T,
    /// Virtual seconds charged for performing this analysis.
    pub clock_charge: T,
}

/// EVC/BC for a given interval, delay and resolved fraction λ.
///
/// The returned report has `horizon` and `clock_charge` zeroed; the session
/// based entry points fill them in.
pub fn evc_bc<T: Real>(
    dp: &DecisionProblem<T>,
    bounds: &ProbabilityBounds<T>,
    t: T,
    delay: T,
    lambda: T,
) -> EvcReport<T> {
    let (l, u, m) = (bounds.lb, bounds.ub, bounds.mean());
    let later = t + delay;
    let act_now_eu = best_expected_utility(dp, m, t);
    let informed_eu = expected_best_uniform(dp, l, u, later);
    let delayed_mean_eu = best_expected_utility(dp, m, later);
    let evc = lambda * informed_eu + (T::one() - lambda) * delayed_mean_eu - act_now_eu;
    EvcReport {
        evc,
        horizon: 0,
        act_now_eu,
        informed_eu,
        delayed_mean_eu,
        resolved_fraction: lambda,
        delay,
        clock_charge: T::zero(),
    }
}

fn evc_at_horizon<T: Real>(
    dp: &DecisionProblem<T>,
    session: &InferenceSession<'_, T>,
    t: T,
    h: usize,
) -> Result<EvcReport<T>> {
    if session.is_exhausted() {
        return Err(Error::SessionExhausted);
    }
    let bounds = session.bounds();
    let w = bounds.width();
    let clock = &session.clock;
    let delay = clock.step_cost.span(session.cursor(), h) + clock.meta_cost;
    let prediction = predict_bounds(session, h)?;
    let lambda = if w > T::zero() {
        (T::one() - prediction.predicted_width / w).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    Ok(EvcReport {
        horizon: h,
        clock_charge: clock.meta_cost,
        ..evc_bc(dp, &bounds, t, delay, lambda)
    })
}

/// Single-step EVC/BC at virtual time `t`.
pub fn evc_myopic<T: Real>(
    dp: &DecisionProblem<T>,
    session: &InferenceSession<'_, T>,
    t: T,
) -> Result<EvcReport<T>> {
    evc_at_horizon(dp, session, t, 1)
}

/// Best EVC over horizons 1..=min(k, remaining); the shortest horizon wins ties.
pub fn evc_lookahead<T: Real>(
    dp: &DecisionProblem<T>,
    session: &InferenceSession<'_, T>,
    t: T,
    k: usize,
) -> Result<EvcReport<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("lookahead horizon must be at least 1".into()));
    }
    let mut best = evc_at_horizon(dp, session, t, 1)?;
    for h in 2..=k.min(session.remaining_steps()) {
        let r = evc_at_horizon(dp, session, t, h)?;
        if r.evc > best.evc {
            best = r;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Myopic,
    Lookahead(usize),
    DominanceOnly,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Myopic => f.write_str("myopic"),
            Policy::Lookahead(k) => write!(f, "lookahead:{k}"),
            Policy::DominanceOnly => f.write_str("dominance-only"),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    /// Accepts `myopic`, `dominance-only` and `lookahead:k` with k ≥ 2.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "myopic" => Ok(Policy::Myopic),
            "dominance-only" => Ok(Policy::DominanceOnly),
            _ => {
                let k = s
                    .strip_prefix("lookahead:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown policy {s:?}")))?;
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad lookahead horizon {k:?}")))?;
                if k < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "lookahead horizon must be at least 2, got {k}"
                    )));
                }
                Ok(Policy::Lookahead(k))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    EvcNonpositive,
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlDecision {
    Continue,
    Halt { action: usize, reason: HaltReason },
    Dominant(usize),
}

impl ControlDecision {
    pub fn action(&self) -> Option<usize> {
        match *self {
            ControlDecision::Continue => None,
            ControlDecision::Halt { action, .. } | ControlDecision::Dominant(action) => Some(action),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<T> {
    pub decision: ControlDecision,
    pub evc: Option<EvcReport<T>>,
}

/// One metareasoning evaluation at virtual time `t`.
///
/// Checks run in order: dominance over the current interval, exhaustion of
/// the schedule, then (unless the policy is dominance-only) EVC ≤ 0. The
/// analysis time is charged to the session clock whenever EVC is computed.
pub fn step_decision<T: Real>(
    dp: &DecisionProblem<T>,
    session: &mut InferenceSession<'_, T>,
    t: T,
    policy: Policy,
) -> Result<StepOutcome<T>> {
    let bounds = session.bounds();
    if let Some(a) = check_dominance(dp, &bounds, t) {
        return Ok(StepOutcome {
            decision: ControlDecision::Dominant(a),
            evc: None,
        });
    }
    let at_mean = act_at_mean(dp, &bounds, t);
    if session.is_exhausted() {
        return Ok(StepOutcome {
            decision: ControlDecision::Halt {
                action: at_mean,
                reason: HaltReason::Exhausted,
            },
            evc: None,
        });
    }
    let report = match policy {
        Policy::DominanceOnly => None,
        Policy::Myopic => Some(evc_myopic(dp, session, t)?),
        Policy::Lookahead(k) => Some(evc_lookahead(dp, session, t, k)?),
    };
    if let Some(r) = &report {
        session.clock.advance(r.clock_charge);
    }
    let decision = match &report {
        Some(r) if r.evc <= T::zero() => ControlDecision::Halt {
            action: at_mean,
            reason: HaltReason::EvcNonpositive,
        },
        _ => ControlDecision::Continue,
    };
    Ok(StepOutcome {
        decision,
        evc: report,
    })
}
