//! Binary-hypothesis decision calculus over time-dependent utilities.
//!
//! Expected utility is linear in p = p(H₁ | E): every action is a line
//! eu(Aᵢ, p, t) = u(AᵢH₂, t) + p·(u(AᵢH₁, t) − u(AᵢH₂, t)). Which action wins
//! above a crossing is always read off the utilities, never assumed.

use std::collections::BTreeMap;

use crate::conditioning::ProbabilityBounds;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::utility::{OutcomeKey, OutcomeUtility};

/// Hypothesis side after aggregation: the designated state versus the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    H1,
    H2,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::H1 => "h1",
            Side::H2 => "h2",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "h1" | "H1" => Some(Side::H1),
            "h2" | "H2" => Some(Side::H2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionUtilities<T> {
    pub name: String,
    pub h1: OutcomeUtility<T>,
    pub h2: OutcomeUtility<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem<T> {
    actions: Vec<ActionUtilities<T>>,
}

impl<T: Real> DecisionProblem<T> {
    pub fn new(actions: Vec<ActionUtilities<T>>) -> Result<Self> {
        if actions.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "decision problem needs at least two actions, got {}",
                actions.len()
            )));
        }
        for a in &actions {
            a.h1.validate()?;
            a.h2.validate()?;
        }
        Ok(Self { actions })
    }

    /// Builds from a map keyed by (action name, "h1" | "h2"), actions in `order`.
    pub fn from_map(order: &[String], map: &BTreeMap<OutcomeKey, OutcomeUtility<T>>) -> Result<Self> {
        let get = |a: &str, side: Side| {
            map.get(&(a.to_string(), side.label().to_string()))
                .cloned()
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("missing utility for ({a}, {})", side.label()))
                })
        };
        let actions = order
            .iter()
            .map(|a| {
                Ok(ActionUtilities {
                    name: a.clone(),
                    h1: get(a, Side::H1)?,
                    h2: get(a, Side::H2)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(actions)
    }

    pub fn actions(&self) -> &[ActionUtilities<T>] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn name(&self, action: usize) -> &str {
        &self.actions[action].name
    }

    /// u(AᵢHⱼ, t). `t` must be nonnegative.
    pub fn utility(&self, action: usize, side: Side, t: T) -> T {
        debug_assert!(t >= T::zero());
        let ou = match side {
            Side::H1 => &self.actions[action].h1,
            Side::H2 => &self.actions[action].h2,
        };
        ou.utility_at(t.max(T::zero())).unwrap_or_else(|_| T::zero())
    }

    /// Intercept and slope of action `i`'s expected-utility line at time `t`.
    fn line(&self, action: usize, t: T) -> (T, T) {
        let h2 = self.utility(action, Side::H2, t);
        (h2, self.utility(action, Side::H1, t) - h2)
    }

    /// Problems where no pair of lines is non-parallel at t = 0 never switch action.
    pub fn has_crossing_pair(&self) -> bool {
        let slopes: Vec<T> = (0..self.len()).map(|i| self.line(i, T::zero()).1).collect();
        slopes
            .iter()
            .enumerate()
            .any(|(i, &a)| slopes[i + 1..].iter().any(|&b| (a - b).abs() >= T::parallel_tolerance()))
    }
}

/// eu(Aᵢ, t) = p·u(AᵢH₁, t) + (1 − p)·u(AᵢH₂, t).
pub fn expected_utility<T: Real>(dp: &DecisionProblem<T>, action: usize, p: T, t: T) -> T {
    p * dp.utility(action, Side::H1, t) + (T::one() - p) * dp.utility(action, Side::H2, t)
}

/// Best action at a point probability; lowest index on ties.
pub fn optimal_action<T: Real>(dp: &DecisionProblem<T>, p: T, t: T) -> usize {
    argmax((0..dp.len()).map(|i| expected_utility(dp, i, p, t)))
}

fn argmax<T: Real>(values: impl Iterator<Item = T>) -> usize {
    values
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, v)| if v > best.1 { (i, v) } else { best })
        .0
}

pub fn best_expected_utility<T: Real>(dp: &DecisionProblem<T>, p: T, t: T) -> T {
    (0..dp.len())
        .map(|i| expected_utility(dp, i, p, t))
        .fold(T::neg_infinity(), T::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold<T> {
    Crossing(T),
    Parallel,
    /// The lines cross at this p, which is not a probability.
    OutsideUnitInterval(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport<T> {
    pub threshold: Threshold<T>,
    /// Action preferred for p above the crossing.
    pub favored_above: usize,
}

impl<T: Real> ThresholdReport<T> {
    pub fn p_star(&self) -> Option<T> {
        match self.threshold {
            Threshold::Crossing(p) => Some(p),
            _ => None,
        }
    }
}

/// p* where the expected-utility lines of actions `i` and `j` cross at time `t`.
pub fn threshold_pstar<T: Real>(
    dp: &DecisionProblem<T>,
    (i, j): (usize, usize),
    t: T,
) -> ThresholdReport<T> {
    let (ci, si) = dp.line(i, t);
    let (cj, sj) = dp.line(j, t);
    let favored_above = if si > sj {
        i
    } else if sj > si {
        j
    } else if ci + si > cj + sj {
        i
    } else if cj + sj > ci + si {
        j
    } else {
        i.min(j)
    };
    let ds = si - sj;
    let threshold = if ds.abs() < T::parallel_tolerance() {
        Threshold::Parallel
    } else {
        let p = (cj - ci) / ds;
        if p >= T::zero() && p <= T::one() {
            Threshold::Crossing(p)
        } else {
            Threshold::OutsideUnitInterval(p)
        }
    };
    ThresholdReport {
        threshold,
        favored_above,
    }
}

/// Action maximizing expected utility at the interval midpoint.
///
/// Expected utility is linear in p, so this is also the action maximizing
/// expected utility under the uniform distribution over the interval.
pub fn act_at_mean<T: Real>(dp: &DecisionProblem<T>, bounds: &ProbabilityBounds<T>, t: T) -> usize {
    optimal_action(dp, bounds.mean(), t)
}

/// The action at least as good as every other at both interval endpoints
/// (strictly better at one of them, per rival), if any.
///
/// By linearity such an action is optimal everywhere in the interval.
pub fn check_dominance<T: Real>(
    dp: &DecisionProblem<T>,
    bounds: &ProbabilityBounds<T>,
    t: T,
) -> Option<usize> {
    let at = |p: T| -> Vec<T> { (0..dp.len()).map(|i| expected_utility(dp, i, p, t)).collect() };
    let (lo, hi) = (at(bounds.lb), at(bounds.ub));
    (0..dp.len()).find(|&a| {
        (0..dp.len()).filter(|&b| b != a).all(|b| {
            lo[a] >= lo[b] && hi[a] >= hi[b] && (lo[a] > lo[b] || hi[a] > hi[b])
        })
    })
}

/// E[maxᵢ eu(Aᵢ, p, t)] for p uniform on [lb, ub], integrated exactly.
///
/// The upper envelope of the lines is piecewise linear; the interval is
/// split at every interior crossing and each piece integrated at its midpoint.
pub fn expected_best_uniform<T: Real>(dp: &DecisionProblem<T>, lb: T, ub: T, t: T) -> T {
    if !(ub > lb) {
        return best_expected_utility(dp, lb, t);
    }
    let lines: Vec<(T, T)> = (0..dp.len()).map(|i| dp.line(i, t)).collect();
    let mut cuts = vec![lb, ub];
    for (i, &(ci, si)) in lines.iter().enumerate() {
        for &(cj, sj) in &lines[i + 1..] {
            let ds = si - sj;
            if ds != T::zero() {
                let p = (cj - ci) / ds;
                if p > lb && p < ub {
                    cuts.push(p);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let two = T::lit(2.0);
    let total: T = cuts
        .windows(2)
        .map(|w| {
            let mid = (w[0] + w[1]) / two;
            let best = lines
                .iter()
                .map(|&(c, s)| c + s * mid)
                .fold(T::neg_infinity(), T::max);
            best * (w[1] - w[0])
        })
        .sum();
    total / (ub - lb)
}
