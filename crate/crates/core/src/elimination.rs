//! Exact inference by variable elimination.
//!
//! This is the subsolver bounded conditioning calls once per cutset
//! instantiation. It does not rely on the clamped network being singly
//! connected; any network is solved exactly.

use crate::network::{BeliefNetwork, Evidence};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A table over a set of variables, last variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T> {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> Factor<T> {
    pub fn scalar(value: T) -> Self {
        Self {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Factor for one CPT with the fixed variables reduced away.
    fn from_cpt(net: &BeliefNetwork<T>, var: usize, fixed: &[Option<usize>]) -> Self {
        let v = net.variable(var);
        let mut family: Vec<usize> = v.parents.clone();
        family.push(var);
        let scope: Vec<usize> = family.iter().copied().filter(|&u| fixed[u].is_none()).collect();
        let cards: Vec<usize> = scope.iter().map(|&u| net.cardinality(u)).collect();
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut local = vec![0usize; scope.len()];
        let mut state = vec![0usize; family.len()];
        for _ in 0..size {
            let mut k = 0;
            for (slot, &u) in family.iter().enumerate() {
                state[slot] = match fixed[u] {
                    Some(s) => s,
                    None => {
                        let s = local[k];
                        k += 1;
                        s
                    }
                };
            }
            let row = v.parents.iter().enumerate().fold(0, |acc, (slot, &p)| {
                acc * net.cardinality(p) + state[slot]
            });
            values.push(v.cpt[row * v.cardinality() + state[family.len() - 1]]);
            increment(&mut local, &cards);
        }
        Self {
            vars: scope,
            cards,
            values,
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|u| u == v)
                    .map(|i| self.cards[i])
                    .unwrap_or_else(|| other.cards[other.vars.iter().position(|u| u == v).unwrap()])
            })
            .collect();
        let map = |f: &Self| -> Vec<usize> {
            let strides = f.strides();
            vars.iter()
                .map(|v| f.vars.iter().position(|u| u == v).map_or(0, |i| strides[i]))
                .collect()
        };
        let (sa, sb) = (map(self), map(other));
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut assignment = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // odometer step, keeping both linear indices in sync
            for k in (0..vars.len()).rev() {
                assignment[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if assignment[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                assignment[k] = 0;
            }
        }
        Self { vars, cards, values }
    }

    pub fn sum_out(&self, var: usize) -> Self {
        let Some(pos) = self.vars.iter().position(|&u| u == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let card = self.cards[pos];
        let stride = strides[pos];
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let outer = self.values.len() / (card * stride);
        let mut values = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            for i in 0..stride {
                let base = o * card * stride + i;
                values.push((0..card).map(|s| self.values[base + s * stride]).sum());
            }
        }
        Self { vars, cards, values }
    }

    /// Value at an assignment given as (variable, state) pairs covering the scope.
    pub fn value_at(&self, assignment: &[(usize, usize)]) -> T {
        let strides = self.strides();
        let idx = self.vars.iter().zip(&strides).fold(0, |acc, (v, st)| {
            let s = assignment
                .iter()
                .find(|(u, _)| u == v)
                .map(|&(_, s)| s)
                .expect("assignment covers factor scope");
            acc + s * st
        });
        self.values[idx]
    }
}

fn increment(assignment: &mut [usize], cards: &[usize]) {
    for k in (0..assignment.len()).rev() {
        assignment[k] += 1;
        if assignment[k] < cards[k] {
            return;
        }
        assignment[k] = 0;
    }
}

/// Joint mass p(keep, fixed) as a table over `keep` (in the given order).
///
/// Variables in `fixed` are clamped; conflicting entries for the same variable
/// give an all-zero table. Kept variables that are also fixed get an
/// indicator over their fixed state.
pub fn marginal_joint<T: Real>(
    net: &BeliefNetwork<T>,
    fixed: &[(usize, usize)],
    keep: &[usize],
) -> Factor<T> {
    let n = net.len();
    let mut clamp: Vec<Option<usize>> = vec![None; n];
    let mut conflict = false;
    for &(v, s) in fixed {
        match clamp[v] {
            Some(prev) if prev != s => conflict = true,
            _ => clamp[v] = Some(s),
        }
    }
    let cards: Vec<usize> = keep.iter().map(|&v| net.cardinality(v)).collect();
    let size: usize = cards.iter().product();
    if conflict {
        return Factor {
            vars: keep.to_vec(),
            cards,
            values: vec![T::zero(); size],
        };
    }

    let mut factors: Vec<Factor<T>> = (0..n).map(|v| Factor::from_cpt(net, v, &clamp)).collect();
    let mut to_eliminate: Vec<usize> = (0..n)
        .filter(|&v| clamp[v].is_none() && !keep.contains(&v))
        .collect();

    while !to_eliminate.is_empty() {
        // min resulting-table-size heuristic, lowest index on ties
        let (pos, _) = to_eliminate
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut scope: Vec<usize> = factors
                    .iter()
                    .filter(|f| f.vars.contains(&v))
                    .flat_map(|f| f.vars.iter().copied())
                    .collect();
                scope.sort_unstable();
                scope.dedup();
                let cost: f64 = scope.iter().map(|&u| net.cardinality(u) as f64).product();
                (i, cost)
            })
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let var = to_eliminate.remove(pos);
        let (with, without): (Vec<_>, Vec<_>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = without;
        if let Some(joined) = with.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(joined.sum_out(var));
        }
    }

    let joint = factors
        .into_iter()
        .fold(Factor::scalar(T::one()), |acc, f| acc.product(&f));

    let mut values = Vec::with_capacity(size);
    let mut assignment = vec![0usize; keep.len()];
    for _ in 0..size {
        let mut inside = true;
        let pairs: Vec<(usize, usize)> = keep
            .iter()
            .zip(&assignment)
            .map(|(&v, &s)| {
                if let Some(f) = clamp[v] {
                    inside &= f == s;
                }
                (v, s)
            })
            .collect();
        values.push(if inside { joint.value_at(&pairs) } else { T::zero() });
        increment(&mut assignment, &cards);
    }
    Factor {
        vars: keep.to_vec(),
        cards,
        values,
    }
}

/// p(evidence) by variable elimination.
pub fn evidence_probability<T: Real>(net: &BeliefNetwork<T>, evidence: &Evidence) -> T {
    let fixed: Vec<(usize, usize)> = evidence.iter().collect();
    marginal_joint(net, &fixed, &[]).total()
}

/// p(query | evidence) by variable elimination over the whole network.
pub fn posterior<T: Real>(
    net: &BeliefNetwork<T>,
    query: (usize, usize),
    evidence: &Evidence,
) -> Result<T> {
    evidence.check(net)?;
    let fixed: Vec<(usize, usize)> = evidence.iter().collect();
    let table = marginal_joint(net, &fixed, &[query.0]);
    let total = table.total();
    if total <= T::zero() {
        return Err(Error::ZeroEvidence);
    }
    Ok(table.values()[query.1] / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::{diamond, var};
    use crate::network::{exact_posterior_enumeration, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn matches_enumeration_on_diamond() {
        let net = diamond();
        for ev in [
            Evidence::new(),
            Evidence::new().with(3, 1).unwrap(),
            Evidence::new().with(3, 0).unwrap().with(1, 1).unwrap(),
        ] {
            for v in 0..4 {
                for s in 0..2 {
                    let exact =
                        exact_posterior_enumeration(&net, (v, s), &ev, DEFAULT_ENUMERATION_CAP)
                            .unwrap();
                    let ve = posterior(&net, (v, s), &ev).unwrap();
                    assert!((exact - ve).abs() < 1e-13, "{v} {s}: {exact} vs {ve}");
                }
            }
        }
    }

    #[test]
    fn joint_over_two_kept_variables_normalizes() {
        let net = diamond();
        let table = marginal_joint(&net, &[], &[3, 0]);
        assert_eq!(table.vars(), &[3, 0]);
        assert!((table.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kept_and_fixed_gives_indicator() {
        let net = diamond();
        let table = marginal_joint(&net, &[(0, 1)], &[0]);
        assert_eq!(table.values()[0], 0.0);
        assert!((table.values()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn conflicting_fixed_is_zero() {
        let table = marginal_joint(&diamond(), &[(1, 0), (1, 1)], &[2]);
        assert!(table.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn impossible_evidence_errors() {
        let net = BeliefNetwork::checked(vec![
            var("A", &[], &[1.0, 0.0]),
            var("B", &[0], &[1.0, 0.0, 0.5, 0.5]),
        ])
        .unwrap();
        let ev = Evidence::new().with(1, 1).unwrap();
        assert_eq!(posterior(&net, (0, 0), &ev), Err(Error::ZeroEvidence));
        assert_eq!(evidence_probability(&net, &ev), 0.0);
    }
}
