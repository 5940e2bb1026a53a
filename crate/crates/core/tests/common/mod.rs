//! Shared oracles and generators for the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use deliberate_core::{BeliefNetwork, Evidence, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap()
}

pub fn binary(name: &str, parents: &[usize], cpt: Vec<f64>) -> Variable<f64> {
    Variable {
        name: name.into(),
        states: vec!["0".into(), "1".into()],
        parents: parents.to_vec(),
        cpt,
    }
}

/// Random DAG over `n` binary variables (4 ≤ n ≤ 12) with at least one loop.
///
/// Variables 0..4 always form a diamond; the rest draw up to three parents
/// among earlier variables. CPT entries stay away from 0 and 1 unless
/// `allow_extremes`.
pub fn random_loopy_network(seed: u64, n: usize, allow_extremes: bool) -> BeliefNetwork<f64> {
    assert!((4..=12).contains(&n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vars = Vec::with_capacity(n);
    for i in 0..n {
        let parents: Vec<usize> = match i {
            0 => vec![],
            1 | 2 => vec![0],
            3 => vec![1, 2],
            _ => {
                let k = rng.gen_range(0..=3.min(i));
                let mut ps: Vec<usize> = Vec::new();
                while ps.len() < k {
                    let p = rng.gen_range(0..i);
                    if !ps.contains(&p) {
                        ps.push(p);
                    }
                }
                ps
            }
        };
        let rows = 1usize << parents.len();
        let mut cpt = Vec::with_capacity(rows * 2);
        for _ in 0..rows {
            let p: f64 = if allow_extremes && rng.gen_bool(0.1) {
                if rng.gen_bool(0.5) { 0.0 } else { 1.0 }
            } else {
                rng.gen_range(0.05..0.95)
            };
            cpt.push(p);
            cpt.push(1.0 - p);
        }
        vars.push(binary(&format!("V{i}"), &parents, cpt));
    }
    BeliefNetwork::checked(vars).unwrap()
}

/// Joint probability of a full assignment, straight from the CPTs.
pub fn joint(net: &BeliefNetwork<f64>, assignment: &[usize]) -> f64 {
    net.variables()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = 0;
            for &p in &v.parents {
                row = row * net.cardinality(p) + assignment[p];
            }
            v.cpt[row * v.states.len() + assignment[i]]
        })
        .product()
}

/// p(query | evidence) by brute-force enumeration; `None` when p(evidence) = 0.
pub fn enumerate_posterior(
    net: &BeliefNetwork<f64>,
    query: (usize, usize),
    evidence: &[(usize, usize)],
) -> Option<f64> {
    let cards: Vec<usize> = (0..net.len()).map(|i| net.cardinality(i)).collect();
    let mut a = vec![0usize; net.len()];
    let (mut num, mut den) = (0.0, 0.0);
    loop {
        if evidence.iter().all(|&(v, s)| a[v] == s) {
            let p = joint(net, &a);
            den += p;
            if a[query.0] == query.1 {
                num += p;
            }
        }
        let mut k = 0;
        loop {
            if k == a.len() {
                return (den > 0.0).then(|| num / den);
            }
            a[k] += 1;
            if a[k] < cards[k] {
                break;
            }
            a[k] = 0;
            k += 1;
        }
    }
}

pub fn evidence_of(pairs: &[(usize, usize)]) -> Evidence {
    let mut e = Evidence::new();
    for &(v, s) in pairs {
        e.observe(v, s).unwrap();
    }
    e
}

/// Undirected cycle check on the skeleton with `clamped` variables removed, by DFS.
pub fn has_undirected_cycle(net: &BeliefNetwork<f64>, clamped: &[usize]) -> bool {
    let n = net.len();
    let mut adj = vec![Vec::new(); n];
    for (c, v) in net.variables().iter().enumerate() {
        for &p in &v.parents {
            if !clamped.contains(&p) && !clamped.contains(&c) {
                adj[p].push(c);
                adj[c].push(p);
            }
        }
    }
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] || clamped.contains(&root) {
            continue;
        }
        // (node, parent in DFS tree)
        let mut stack = vec![(root, usize::MAX)];
        while let Some((v, from)) = stack.pop() {
            if seen[v] {
                return true;
            }
            seen[v] = true;
            let mut skipped_back = false;
            for &u in &adj[v] {
                if u == from && !skipped_back {
                    skipped_back = true;
                    continue;
                }
                if seen[u] && u != from {
                    return true;
                }
                if !seen[u] {
                    stack.push((u, v));
                }
            }
        }
    }
    false
}
