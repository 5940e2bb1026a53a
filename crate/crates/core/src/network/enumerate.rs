//! Chain-rule joint probability and brute-force posterior enumeration.
//!
//! These are the ground-truth oracles for small networks; they share no code
//! with the variable-elimination subsolver.

use super::{BeliefNetwork, Evidence};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest state space the enumeration oracle will walk.
pub const DEFAULT_ENUMERATION_CAP: f64 = (1u64 << 20) as f64;

/// Product of CPT entries for a full assignment (one state index per variable).
pub fn joint_probability<T: Real>(net: &BeliefNetwork<T>, assignment: &[usize]) -> Result<T> {
    if assignment.len() < net.len() {
        return Err(Error::IncompleteAssignment(
            net.variable(assignment.len()).name.clone(),
        ));
    }
    let mut p = T::one();
    for (i, v) in net.variables().iter().enumerate() {
        let s = assignment[i];
        if s >= v.cardinality() {
            return Err(Error::InvalidArgument(format!(
                "state {s} out of range for {}",
                v.name
            )));
        }
        let row = net.row_index(i, assignment);
        p *= v.cpt[row * v.cardinality() + s];
    }
    Ok(p)
}

/// p(query | evidence) by summing the joint over every full assignment.
pub fn exact_posterior_enumeration<T: Real>(
    net: &BeliefNetwork<T>,
    query: (usize, usize),
    evidence: &Evidence,
    cap: f64,
) -> Result<T> {
    evidence.check(net)?;
    let size = net.state_space_size();
    if size > cap {
        return Err(Error::StateSpaceTooLarge { size, cap });
    }
    let (qv, qs) = query;
    if qv >= net.len() || qs >= net.cardinality(qv) {
        return Err(Error::InvalidArgument(format!("query ({qv}, {qs}) out of range")));
    }
    let n = net.len();
    let mut assignment = vec![0usize; n];
    for (v, s) in evidence.iter() {
        assignment[v] = s;
    }
    let free: Vec<usize> = (0..n).filter(|&v| evidence.get(v).is_none()).collect();
    let mut numerator = T::zero();
    let mut denominator = T::zero();
    loop {
        let p = joint_probability(net, &assignment)?;
        denominator += p;
        if assignment[qv] == qs {
            numerator += p;
        }
        // odometer over the unobserved variables, last one fastest
        let mut k = free.len();
        loop {
            if k == 0 {
                return if denominator > T::zero() {
                    Ok(numerator / denominator)
                } else {
                    Err(Error::ZeroEvidence)
                };
            }
            k -= 1;
            let v = free[k];
            assignment[v] += 1;
            if assignment[v] < net.cardinality(v) {
                break;
            }
            assignment[v] = 0;
        }
    }
}
