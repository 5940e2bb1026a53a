//! Deterministic virtual time.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Virtual seconds charged per cutset instantiation.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSchedule<T> {
    Uniform(T),
    /// Cost of the i-th processed instantiation; indices past the end reuse the last entry.
    PerIndex(Vec<T>),
}

impl<T: Real> CostSchedule<T> {
    pub fn cost(&self, index: usize) -> T {
        match self {
            CostSchedule::Uniform(c) => *c,
            CostSchedule::PerIndex(costs) => costs
                .get(index)
                .or_else(|| costs.last())
                .copied()
                .unwrap_or_else(T::zero),
        }
    }

    /// Total cost of `count` steps starting at `start`.
    pub fn span(&self, start: usize, count: usize) -> T {
        (start..start + count).map(|i| self.cost(i)).sum()
    }

    fn costs(&self) -> Vec<T> {
        match self {
            CostSchedule::Uniform(c) => vec![*c],
            CostSchedule::PerIndex(costs) => costs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualClock<T> {
    now: T,
    pub step_cost: CostSchedule<T>,
    /// Charged once per metareasoning evaluation.
    pub meta_cost: T,
    /// Fraction of one instantiation's cost charged per instantiation during setup.
    pub setup_factor: T,
}

impl<T: Real> VirtualClock<T> {
    pub fn new(step_cost: CostSchedule<T>, meta_cost: T) -> Result<Self> {
        Self::with_setup_factor(step_cost, meta_cost, T::lit(0.01))
    }

    pub fn with_setup_factor(
        step_cost: CostSchedule<T>,
        meta_cost: T,
        setup_factor: T,
    ) -> Result<Self> {
        let all = step_cost
            .costs()
            .into_iter()
            .chain([meta_cost, setup_factor]);
        for c in all {
            if !(c >= T::zero()) || !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "clock costs must be finite and nonnegative, got {c}"
                )));
            }
        }
        Ok(Self {
            now: T::zero(),
            step_cost,
            meta_cost,
            setup_factor,
        })
    }

    pub fn now(&self) -> T {
        self.now
    }

    /// Moves time forward; negative or NaN charges are ignored.
    pub fn advance(&mut self, dt: T) {
        if dt > T::zero() {
            self.now += dt;
        }
    }
}

impl Default for VirtualClock<f64> {
    fn default() -> Self {
        Self::new(CostSchedule::Uniform(1.0), 0.05).expect("default costs are valid")
    }
}
