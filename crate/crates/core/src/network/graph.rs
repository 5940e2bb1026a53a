//! Graph analysis: topological order, directed-cycle detection and loop cutsets.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::BeliefNetwork;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parents-before-children order; ties go to the lowest variable index.
pub fn topological_order<T: Real>(net: &BeliefNetwork<T>) -> Result<Vec<usize>> {
    let n = net.len();
    let children = net.children();
    let mut indegree: Vec<usize> = net
        .variables()
        .iter()
        .map(|v| v.parents.iter().filter(|&&p| p < n).count())
        .collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n)
            .find(|&i| indegree[i] > 0)
            .map(|i| net.variable(i).name.clone())
            .unwrap_or_default();
        return Err(Error::NotADag(stuck));
    }
    Ok(order)
}

/// Returns the variables of one directed cycle, if any, in edge order.
pub(crate) fn find_directed_cycle<T: Real>(net: &BeliefNetwork<T>) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        OnStack,
        Done,
    }
    let n = net.len();
    let children = net.children();
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // iterative DFS keeping the current path
        let mut path: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::OnStack;
        while let Some(&(v, next)) = path.last() {
            if let Some(&c) = children[v].get(next) {
                path.last_mut().unwrap().1 += 1;
                match mark[c] {
                    Mark::New => {
                        mark[c] = Mark::OnStack;
                        path.push((c, 0));
                    }
                    Mark::OnStack => {
                        let start = path.iter().position(|&(u, _)| u == c).unwrap();
                        let mut cycle: Vec<usize> = path[start..].iter().map(|&(u, _)| u).collect();
                        cycle.push(c);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                path.pop();
            }
        }
    }
    None
}

fn skeleton<T: Real>(net: &BeliefNetwork<T>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); net.len()];
    for (child, v) in net.variables().iter().enumerate() {
        for &p in &v.parents {
            adj[p].push(child);
            adj[child].push(p);
        }
    }
    adj
}

/// True when the undirected skeleton restricted to unclamped variables is a forest.
///
/// Uses union-find over edges, independent of the pruning used by
/// [`find_loop_cutset`].
pub fn is_singly_connected<T: Real>(net: &BeliefNetwork<T>, clamped: &[usize]) -> bool {
    let n = net.len();
    let mut removed = vec![false; n];
    for &c in clamped {
        removed[c] = true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (child, v) in net.variables().iter().enumerate() {
        if removed[child] {
            continue;
        }
        for &p in &v.parents {
            if removed[p] {
                continue;
            }
            let (a, b) = (find(&mut parent, p), find(&mut parent, child));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
    }
    true
}

/// Greedy loop cutset.
///
/// Repeatedly strips variables of degree at most one (they lie on no cycle),
/// then clamps the remaining variable maximizing (degree − 1)·ln(cardinality),
/// lowest index on ties. A final pass drops cutset members that are not needed.
/// The result is sorted ascending.
pub fn find_loop_cutset<T: Real>(net: &BeliefNetwork<T>) -> Vec<usize> {
    let n = net.len();
    let adj = skeleton(net);
    let mut active = vec![true; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut cutset = Vec::new();

    let remove = |v: usize, active: &mut Vec<bool>, degree: &mut Vec<usize>| {
        active[v] = false;
        for &u in &adj[v] {
            if active[u] {
                degree[u] -= 1;
            }
        }
    };

    loop {
        let mut stack: Vec<usize> = (0..n).filter(|&v| active[v] && degree[v] <= 1).collect();
        while let Some(v) = stack.pop() {
            if !active[v] {
                continue;
            }
            remove(v, &mut active, &mut degree);
            for &u in &adj[v] {
                if active[u] && degree[u] <= 1 {
                    stack.push(u);
                }
            }
        }
        let pick = (0..n).filter(|&v| active[v]).fold(None, |best: Option<(usize, f64)>, v| {
            let score = (degree[v] as f64 - 1.0) * (net.cardinality(v) as f64).ln();
            match best {
                Some((_, s)) if s >= score => best,
                _ => Some((v, score)),
            }
        });
        match pick {
            None => break,
            Some((v, _)) => {
                cutset.push(v);
                remove(v, &mut active, &mut degree);
            }
        }
    }

    for i in (0..cutset.len()).rev() {
        let without: Vec<usize> = cutset
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .collect();
        if is_singly_connected(net, &without) {
            cutset.remove(i);
        }
    }
    cutset.sort_unstable();
    cutset
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::{chain, diamond, var};

    #[test]
    fn chain_order_is_forced() {
        let net = BeliefNetwork::checked(vec![
            var("A", &[], &[0.5, 0.5]),
            var("B", &[0], &[0.5, 0.5, 0.5, 0.5]),
            var("C", &[1], &[0.5, 0.5, 0.5, 0.5]),
        ])
        .unwrap();
        assert_eq!(topological_order(&net).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn parentless_keep_declaration_order() {
        let net = BeliefNetwork::checked(vec![
            var("C", &[], &[0.5, 0.5]),
            var("A", &[], &[0.5, 0.5]),
            var("B", &[], &[0.5, 0.5]),
        ])
        .unwrap();
        let order = topological_order(&net).unwrap();
        let names: Vec<_> = order.iter().map(|&i| net.variable(i).name.as_str()).collect();
        assert_eq!(names, ["C", "A", "B"]);
    }

    #[test]
    fn diamond_order() {
        assert_eq!(topological_order(&diamond()).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn child_declared_first() {
        let net = BeliefNetwork::checked(vec![
            var("B", &[1], &[0.5, 0.5, 0.5, 0.5]),
            var("A", &[], &[0.5, 0.5]),
        ])
        .unwrap();
        assert_eq!(topological_order(&net).unwrap(), vec![1, 0]);
    }

    #[test]
    fn cycle_is_not_a_dag() {
        let net = BeliefNetwork::from_variables(vec![
            var("A", &[1], &[0.5, 0.5, 0.5, 0.5]),
            var("B", &[0], &[0.5, 0.5, 0.5, 0.5]),
        ]);
        assert!(matches!(topological_order(&net), Err(Error::NotADag(_))));
        assert_eq!(find_directed_cycle(&net).unwrap().len(), 3);
    }

    #[test]
    fn polytree_has_empty_cutset() {
        assert!(find_loop_cutset(&chain()).is_empty());
        assert!(is_singly_connected(&chain(), &[]));
    }

    #[test]
    fn diamond_cutset_is_single_variable() {
        let net = diamond();
        let cutset = find_loop_cutset(&net);
        assert_eq!(cutset.len(), 1);
        assert!(is_singly_connected(&net, &cutset));
        assert!(!is_singly_connected(&net, &[]));
    }
}
