//! Anytime bounded conditioning.
//!
//! The network is decomposed by clamping a loop cutset. Each cutset
//! instantiation c is solved exactly, in descending order of its prior mass
//! p(c). With A = Σ p(H₁, c, E) and B = Σ p(c, E) over processed
//! instantiations and R the prior mass still unprocessed, the posterior
//! p(H₁ | E) lies in
//!
//! ```text
//! [ A / (B + R),  (A + R) / (B + R) ]
//! ```
//!
//! because every unprocessed instantiation adds between 0 and p(c) to both
//! numerator and denominator. The interval only narrows and collapses to
//! A / B once R reaches zero.

use crate::clock::VirtualClock;
use crate::elimination::marginal_joint;
use crate::error::{Error, Result};
use crate::network::{find_loop_cutset, BeliefNetwork, Evidence};
use crate::scalar::Real;

pub const DEFAULT_INSTANTIATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBounds<T> {
    pub lb: T,
    pub ub: T,
}

impl<T: Real> ProbabilityBounds<T> {
    pub fn new(lb: T, ub: T) -> Self {
        debug_assert!(T::zero() <= lb && lb <= ub && ub <= T::one(), "bad bounds [{lb}, {ub}]");
        Self { lb, ub }
    }

    pub fn vacuous() -> Self {
        Self::new(T::zero(), T::one())
    }

    pub fn point(p: T) -> Self {
        Self::new(p, p)
    }

    pub fn width(&self) -> T {
        self.ub - self.lb
    }

    /// Midpoint: the mean of the uniform reading of the interval.
    pub fn mean(&self) -> T {
        (self.lb + self.ub) / T::lit(2.0)
    }

    pub fn contains(&self, p: T, slack: T) -> bool {
        p >= self.lb - slack && p <= self.ub + slack
    }
}

/// One assignment of the cutset variables, with its exact prior mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CutsetInstantiation<T> {
    /// States, parallel to the session's cutset variables.
    pub states: Vec<usize>,
    pub prior_mass: T,
}

/// Exact (p(c, E), p(H₁, c, E)) for one clamped assignment.
pub fn solve_conditioned<T: Real>(
    net: &BeliefNetwork<T>,
    evidence: &Evidence,
    clamped: &[(usize, usize)],
    query: (usize, usize),
) -> (T, T) {
    let fixed: Vec<(usize, usize)> = evidence.iter().chain(clamped.iter().copied()).collect();
    let table = marginal_joint(net, &fixed, &[query.0]);
    let evidence_mass = table.total();
    let query_mass = table.values()[query.1].min(evidence_mass);
    (evidence_mass, query_mass)
}

#[derive(Debug, Clone)]
pub struct InferenceSession<'a, T> {
    net: &'a BeliefNetwork<T>,
    evidence: Evidence,
    query: (usize, usize),
    cutset: Vec<usize>,
    schedule: Vec<CutsetInstantiation<T>>,
    /// remaining[i] = prior mass of schedule[i..]
    remaining: Vec<T>,
    cursor: usize,
    query_mass: T,
    evidence_mass: T,
    processed_prior: T,
    bounds: ProbabilityBounds<T>,
    pub clock: VirtualClock<T>,
}

impl<'a, T: Real> InferenceSession<'a, T> {
    /// Computes the cutset, enumerates and orders its instantiations, and
    /// charges the setup work to the clock.
    pub fn new(
        net: &'a BeliefNetwork<T>,
        evidence: Evidence,
        query: (usize, usize),
        clock: VirtualClock<T>,
    ) -> Result<Self> {
        Self::with_cap(net, evidence, query, clock, DEFAULT_INSTANTIATION_CAP)
    }

    pub fn with_cap(
        net: &'a BeliefNetwork<T>,
        evidence: Evidence,
        query: (usize, usize),
        clock: VirtualClock<T>,
        cap: usize,
    ) -> Result<Self> {
        evidence.check(net)?;
        if query.0 >= net.len() || query.1 >= net.cardinality(query.0) {
            return Err(Error::InvalidArgument(format!(
                "query ({}, {}) out of range",
                query.0, query.1
            )));
        }
        let cutset = find_loop_cutset(net);
        let count: f64 = cutset.iter().map(|&v| net.cardinality(v) as f64).product();
        if count > cap as f64 {
            return Err(Error::CutsetTooLarge { count, cap });
        }
        Ok(Self::with_cutset(net, evidence, query, clock, cutset))
    }

    /// Builds a session over a caller-chosen conditioning set. Any set works
    /// for correctness; the exact subsolver does not need singly connected
    /// subproblems.
    pub fn with_cutset(
        net: &'a BeliefNetwork<T>,
        evidence: Evidence,
        query: (usize, usize),
        mut clock: VirtualClock<T>,
        cutset: Vec<usize>,
    ) -> Self {
        let cards: Vec<usize> = cutset.iter().map(|&v| net.cardinality(v)).collect();
        let joint = marginal_joint(net, &[], &cutset);
        // table order is already lexicographic over the cutset states
        let mut schedule: Vec<CutsetInstantiation<T>> = Vec::with_capacity(joint.values().len());
        let mut states = vec![0usize; cutset.len()];
        for &mass in joint.values() {
            schedule.push(CutsetInstantiation {
                states: states.clone(),
                prior_mass: mass,
            });
            for k in (0..states.len()).rev() {
                states[k] += 1;
                if states[k] < cards[k] {
                    break;
                }
                states[k] = 0;
            }
        }
        // stable: equal masses keep lexicographic order
        schedule.sort_by(|x, y| y.prior_mass.partial_cmp(&x.prior_mass).unwrap());

        let mut remaining = vec![T::zero(); schedule.len() + 1];
        for i in (0..schedule.len()).rev() {
            remaining[i] = remaining[i + 1] + schedule[i].prior_mass;
        }

        let setup = clock.step_cost.span(0, schedule.len()) * clock.setup_factor;
        clock.advance(setup);

        Self {
            net,
            evidence,
            query,
            cutset,
            schedule,
            remaining,
            cursor: 0,
            query_mass: T::zero(),
            evidence_mass: T::zero(),
            processed_prior: T::zero(),
            bounds: ProbabilityBounds::vacuous(),
            clock,
        }
    }

    pub fn network(&self) -> &'a BeliefNetwork<T> {
        self.net
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn query(&self) -> (usize, usize) {
        self.query
    }

    pub fn cutset(&self) -> &[usize] {
        &self.cutset
    }

    pub fn schedule(&self) -> &[CutsetInstantiation<T>] {
        &self.schedule
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining_steps(&self) -> usize {
        self.schedule.len() - self.cursor
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor == self.schedule.len()
    }

    /// Σ p(H₁, c, E) over processed instantiations.
    pub fn query_mass(&self) -> T {
        self.query_mass
    }

    /// Σ p(c, E) over processed instantiations.
    pub fn evidence_mass(&self) -> T {
        self.evidence_mass
    }

    /// Prior mass of the unprocessed instantiations.
    pub fn remaining_mass(&self) -> T {
        self.remaining[self.cursor]
    }

    /// Prior mass of the processed instantiations.
    pub fn processed_mass(&self) -> T {
        self.processed_prior
    }

    /// Prior masses of the next `h` instantiations in schedule order.
    pub fn upcoming_masses(&self, h: usize) -> impl Iterator<Item = T> + '_ {
        let end = (self.cursor + h).min(self.schedule.len());
        self.schedule[self.cursor..end].iter().map(|c| c.prior_mass)
    }

    pub fn bounds(&self) -> ProbabilityBounds<T> {
        self.bounds
    }

    /// Processes the next instantiation and returns the narrowed interval.
    pub fn refine_step(&mut self) -> Result<ProbabilityBounds<T>> {
        let inst = self.schedule.get(self.cursor).ok_or(Error::SessionExhausted)?;
        let prior = inst.prior_mass;
        let clamped: Vec<(usize, usize)> = self
            .cutset
            .iter()
            .copied()
            .zip(inst.states.iter().copied())
            .collect();
        let (evidence_mass, query_mass) =
            solve_conditioned(self.net, &self.evidence, &clamped, self.query);
        // p(H₁,c,E) ≤ p(c,E) ≤ p(c) holds exactly; clamp away rounding from the two solve paths
        let evidence_mass = evidence_mass.min(prior);
        let query_mass = query_mass.min(evidence_mass);

        self.query_mass += query_mass;
        self.evidence_mass += evidence_mass;
        self.processed_prior += prior;
        let step_index = self.cursor;
        self.cursor += 1;
        self.clock.advance(self.clock.step_cost.cost(step_index));

        let prev = self.bounds;
        let rest = self.remaining_mass();
        let denom = self.evidence_mass + rest;
        self.bounds = if self.is_exhausted() {
            if self.evidence_mass > T::zero() {
                let p = (self.query_mass / self.evidence_mass).max(prev.lb).min(prev.ub);
                ProbabilityBounds::point(p)
            } else {
                prev
            }
        } else if denom > T::zero() {
            let lb = (self.query_mass / denom).max(prev.lb);
            let ub = ((self.query_mass + rest) / denom).min(prev.ub).max(lb);
            ProbabilityBounds::new(lb, ub)
        } else {
            prev
        };
        Ok(self.bounds)
    }

    /// Steps to exhaustion and returns the collapsed posterior.
    pub fn run_to_convergence(&mut self) -> Result<T> {
        while !self.is_exhausted() {
            self.refine_step()?;
        }
        if self.evidence_mass <= T::zero() {
            return Err(Error::ZeroEvidence);
        }
        Ok(self.bounds.lb)
    }
}
