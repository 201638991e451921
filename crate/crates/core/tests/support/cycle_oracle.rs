//! Exhaustive simple-cycle enumeration, used as an independent oracle for
//! the cycle algorithms. Only suitable for small graphs.

#![allow(dead_code)]

use gainsynth_core::gain::WeightedGraph;
use gainsynth_core::{Gain, Rational};
use rand::Rng;

/// Every simple cycle through reachable nodes, as edge-index lists. Each
/// cycle is reported once, rooted at its smallest node.
pub fn simple_cycles<L>(g: &WeightedGraph<L>) -> Vec<Vec<usize>> {
    let reachable = g.reachable();
    let mut out = Vec::new();
    for start in 0..g.node_count() {
        if !reachable[start] {
            continue;
        }
        let mut path = Vec::new();
        let mut on_path = vec![false; g.node_count()];
        on_path[start] = true;
        extend(g, start, start, &mut path, &mut on_path, &mut out);
    }
    out
}

fn extend<L>(
    g: &WeightedGraph<L>,
    start: usize,
    node: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    for (i, e) in g.edges().iter().enumerate() {
        if e.source != node || e.target < start {
            continue;
        }
        if e.target == start {
            let mut c = path.clone();
            c.push(i);
            out.push(c);
        } else if !on_path[e.target] {
            on_path[e.target] = true;
            path.push(i);
            extend(g, start, e.target, path, on_path, out);
            path.pop();
            on_path[e.target] = false;
        }
    }
}

pub fn brute_max_mean<L>(g: &WeightedGraph<L>) -> Option<Rational> {
    simple_cycles(g)
        .iter()
        .map(|c| g.cycle_sum(c, |e| e.mu) / Rational::from_integer(c.len() as i64))
        .max()
}

pub fn brute_gain<L>(g: &WeightedGraph<L>) -> Gain {
    let mut best = Gain::Finite(Rational::from_integer(0));
    for c in simple_cycles(g) {
        let r = g.cycle_sum(&c, |e| e.rho);
        let m = g.cycle_sum(&c, |e| e.mu);
        let ratio = if r == Rational::from_integer(0) {
            if m > Rational::from_integer(0) {
                Gain::Infinite
            } else {
                continue;
            }
        } else {
            Gain::Finite(m / r)
        };
        best = best.max(ratio);
    }
    best
}

/// Stable iff every reachable simple cycle has non-negative `gamma*rho - mu`.
pub fn brute_stable<L>(g: &WeightedGraph<L>, gamma: Rational) -> bool {
    simple_cycles(g)
        .iter()
        .all(|c| g.cycle_sum(c, |e| gamma * e.rho - e.mu) >= Rational::from_integer(0))
}

/// Random multigraph with up to `max_nodes` nodes; `rho` and `mu` drawn from
/// the given inclusive integer ranges.
pub fn random_graph(
    rng: &mut impl Rng,
    max_nodes: usize,
    rho: (i64, i64),
    mu: (i64, i64),
) -> WeightedGraph {
    let n = rng.random_range(1..=max_nodes);
    let m = rng.random_range(0..=2 * n + 2);
    let mut g = WeightedGraph::new(n, rng.random_range(0..n)).unwrap();
    for _ in 0..m {
        let s = rng.random_range(0..n);
        let t = rng.random_range(0..n);
        let r = Rational::from_integer(rng.random_range(rho.0..=rho.1));
        let w = Rational::from_integer(rng.random_range(mu.0..=mu.1));
        g.add_edge(s, t, r, w, ()).unwrap();
    }
    g
}
