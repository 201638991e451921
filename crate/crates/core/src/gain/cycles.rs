//! Cycle analysis over weighted graphs: gain-stability verdicts, exact gains
//! by parametric negative-cycle search, and Karp's maximum cycle mean.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Signed;

use super::graph::{BellmanFord, Cycle, IntView, WeightedEdge, WeightedGraph};
use super::GainError;
use crate::rational::{common_denominator, is_nonnegative, scaled, Gain, Rational};

/// Outcome of checking a graph against a fixed gain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    /// A reachable cycle with `sum(gamma*rho - mu) < 0`.
    Witness(Cycle),
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityVerdict::Stable)
    }
}

/// Maximum cycle mean with one cycle achieving it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleMean {
    pub mean: Rational,
    pub cycle: Cycle,
}

/// Integer rho/mu weights over the reachable part of a graph.
struct Scaled {
    node_count: usize,
    edges: Vec<(usize, usize, usize)>,
    rho: Vec<i128>,
    mu: Vec<i128>,
}

impl Scaled {
    fn new<L>(g: &WeightedGraph<L>) -> Self {
        let scale = common_denominator(g.edges().iter().flat_map(|e| [&e.rho, &e.mu]));
        let reachable = g.reachable_edges();
        let edges = reachable
            .iter()
            .map(|&i| (g.edge(i).source, g.edge(i).target, i))
            .collect();
        Self {
            node_count: g.node_count(),
            edges,
            rho: g.edges().iter().map(|e| scaled(&e.rho, scale)).collect(),
            mu: g.edges().iter().map(|e| scaled(&e.mu, scale)).collect(),
        }
    }

    /// Bellman-Ford on the weights `p*rho - q*mu`, i.e. gamma = p/q scaled by q.
    fn run(&self, p: i128, q: i128) -> (Vec<i128>, BellmanFord) {
        let weights: Vec<i128> = self
            .rho
            .iter()
            .zip(&self.mu)
            .map(|(r, m)| p * r - q * m)
            .collect();
        let view = IntView {
            node_count: self.node_count,
            edges: self.edges.clone(),
            weights: &weights,
        };
        let verdict = view.bellman_ford();
        (weights, verdict)
    }

    /// Where `p/q` sits relative to the largest cycle ratio `sum(mu)/sum(rho)`.
    fn compare(&self, p: i128, q: i128) -> (Ordering, Option<Cycle>) {
        let (weights, verdict) = self.run(p, q);
        match verdict {
            BellmanFord::NegativeCycle(c) => (Ordering::Less, Some(c)),
            BellmanFord::Potentials(dist) => {
                let view = IntView {
                    node_count: self.node_count,
                    edges: self.edges.clone(),
                    weights: &weights,
                };
                match view.tight_cycle(&dist, |e| self.rho[e] > 0) {
                    Some(c) => (Ordering::Equal, Some(c)),
                    None => (Ordering::Greater, None),
                }
            }
        }
    }
}

/// Checks `inf_T sum_{t<=T} gamma*rho - mu > -inf` for every run from the
/// initial node, which on a finite graph holds iff no reachable cycle has
/// negative total `gamma*rho - mu`.
pub fn verify_gain_stable<L>(
    g: &WeightedGraph<L>,
    gamma: Rational,
) -> Result<StabilityVerdict, GainError> {
    if gamma.is_negative() {
        return Err(GainError::NegativeGamma);
    }
    let scaled = Scaled::new(g);
    let (p, q) = (i128::from(*gamma.numer()), i128::from(*gamma.denom()));
    Ok(match scaled.run(p, q).1 {
        BellmanFord::NegativeCycle(c) => StabilityVerdict::Witness(c),
        BellmanFord::Potentials(_) => StabilityVerdict::Stable,
    })
}

/// The least gamma for which the graph is gain stable.
pub fn compute_gain<L>(g: &WeightedGraph<L>) -> Result<Gain, GainError> {
    compute_gain_witnessed(g).map(|(gain, _)| gain)
}

/// Like [`compute_gain`], also returning a critical cycle when one exists.
///
/// The search walks the Stern-Brocot tree with galloping steps; each probe
/// is a Bellman-Ford pass, and termination is exact because the answer is a
/// cycle ratio with a bounded denominator.
pub fn compute_gain_witnessed<L>(g: &WeightedGraph<L>) -> Result<(Gain, Option<Cycle>), GainError> {
    if g
        .edges()
        .iter()
        .any(|e| !is_nonnegative(&e.rho) || !is_nonnegative(&e.mu))
    {
        return Err(GainError::NegativeWeight);
    }
    let s = Scaled::new(g);

    // Unbounded gain: a reachable cycle of zero rho carrying positive mu.
    let zero_rho: Vec<(usize, usize, usize)> =
        s.edges.iter().copied().filter(|&(_, _, e)| s.rho[e] == 0).collect();
    let comp = super::graph::scc(s.node_count, &zero_rho);
    if let Some(&(src, dst, e)) = zero_rho
        .iter()
        .find(|&&(a, b, e)| comp[a] == comp[b] && s.mu[e] > 0)
    {
        let mut cycle = vec![e];
        if dst != src {
            let back = super::graph::bfs_path(s.node_count, &zero_rho, dst, src, |x| {
                comp[x] == comp[src]
            })
            .expect("strongly connected");
            cycle.extend(back);
        }
        return Ok((Gain::Infinite, Some(cycle)));
    }

    match s.compare(0, 1) {
        (Ordering::Less, _) => {}
        (_, witness) => return Ok((Gain::Finite(Rational::from_integer(0)), witness)),
    }

    let (mut lo, mut hi) = ((0i128, 1i128), (1i128, 0i128));
    loop {
        let mid = (lo.0 + hi.0, lo.1 + hi.1);
        let (ord, witness) = s.compare(mid.0, mid.1);
        match ord {
            Ordering::Equal => return Ok((Gain::Finite(to_rational(mid)), witness)),
            Ordering::Less => {
                // Step k times towards hi: lo + k*hi.
                let step = |k: i128| (lo.0 + k * hi.0, lo.1 + k * hi.1);
                match gallop(&s, step, Ordering::Less) {
                    Gallop::Hit(x, w) => return Ok((Gain::Finite(to_rational(x)), w)),
                    Gallop::Stop(k) => lo = step(k),
                }
            }
            Ordering::Greater => {
                let step = |k: i128| (hi.0 + k * lo.0, hi.1 + k * lo.1);
                match gallop(&s, step, Ordering::Greater) {
                    Gallop::Hit(x, w) => return Ok((Gain::Finite(to_rational(x)), w)),
                    Gallop::Stop(k) => hi = step(k),
                }
            }
        }
    }
}

enum Gallop {
    Hit((i128, i128), Option<Cycle>),
    /// Largest k for which the probe stayed on the starting side.
    Stop(i128),
}

/// Finds the largest `k >= 1` such that `step(k)` still compares as `side`,
/// given that `step(1)` does. Returns early on an exact hit.
fn gallop(s: &Scaled, step: impl Fn(i128) -> (i128, i128), side: Ordering) -> Gallop {
    let mut good = 1i128;
    let mut bad = 2i128;
    loop {
        let x = step(bad);
        match s.compare(x.0, x.1) {
            (Ordering::Equal, w) => return Gallop::Hit(x, w),
            (ord, _) if ord == side => {
                good = bad;
                bad *= 2;
            }
            _ => break,
        }
    }
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        let x = step(mid);
        match s.compare(x.0, x.1) {
            (Ordering::Equal, w) => return Gallop::Hit(x, w),
            (ord, _) if ord == side => good = mid,
            _ => bad = mid,
        }
    }
    Gallop::Stop(good)
}

fn to_rational((p, q): (i128, i128)) -> Rational {
    Rational::new(
        i64::try_from(p).expect("gain numerator fits i64"),
        i64::try_from(q).expect("gain denominator fits i64"),
    )
}

/// Karp's maximum cycle mean over cycles reachable from the initial node.
///
/// `weight` selects the per-edge quantity; node weights are expressed by
/// putting them on every outgoing edge. Returns `None` when no cycle is
/// reachable.
#[allow(clippy::needless_range_loop)]
pub fn max_cycle_mean<L>(
    g: &WeightedGraph<L>,
    weight: impl Fn(&WeightedEdge<L>) -> Rational,
) -> Option<CycleMean> {
    let reachable = g.reachable();
    let nodes: Vec<usize> = (0..g.node_count()).filter(|&v| reachable[v]).collect();
    let mut local = vec![usize::MAX; g.node_count()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    let n = nodes.len();
    let raw: Vec<Rational> = g.edges().iter().map(&weight).collect();
    let scale = common_denominator(raw.iter());
    let w: Vec<i128> = raw.iter().map(|x| scaled(x, scale)).collect();
    let edges: Vec<(usize, usize, usize)> = g
        .reachable_edges()
        .into_iter()
        .map(|e| (local[g.edge(e).source], local[g.edge(e).target], e))
        .collect();

    // best[k][v]: heaviest walk of exactly k edges from the initial node.
    let mut best: Vec<Vec<Option<i128>>> = vec![vec![None; n]; n + 1];
    best[0][local[g.initial()]] = Some(0);
    for k in 0..n {
        let (head, tail) = best.split_at_mut(k + 1);
        let (prev, next) = (&head[k], &mut tail[0]);
        for &(s, t, e) in &edges {
            if let Some(d) = prev[s] {
                let c = d + w[e];
                if next[t].is_none_or(|old| c > old) {
                    next[t] = Some(c);
                }
            }
        }
    }

    let mut answer: Option<Rational128> = None;
    for v in 0..n {
        let Some(dn) = best[n][v] else { continue };
        let worst = (0..n)
            .filter_map(|k| best[k][v].map(|dk| Rational128::new(dn - dk, (n - k) as i128)))
            .min()
            .expect("k = 0 or a shorter walk exists");
        if answer.is_none_or(|a| worst > a) {
            answer = Some(worst);
        }
    }
    let mean = answer?;

    // Witness: with weights q - p*w (p/q the scaled mean) no cycle is negative
    // and the optimal cycles are exactly the tight ones.
    let shifted: Vec<i128> = w.iter().map(|x| mean.num - mean.den * x).collect();
    let view = IntView {
        node_count: n,
        edges: edges.clone(),
        weights: &shifted,
    };
    let dist = match view.bellman_ford() {
        BellmanFord::Potentials(d) => d,
        BellmanFord::NegativeCycle(_) => unreachable!("no cycle exceeds the maximum mean"),
    };
    let cycle = view
        .tight_cycle(&dist, |_| true)
        .expect("a cycle attains the maximum mean");
    let mean = Rational::new(
        i64::try_from(mean.num).expect("mean fits i64"),
        i64::try_from(mean.den * i128::from(scale)).expect("mean fits i64"),
    );
    Some(CycleMean { mean, cycle })
}

/// Minimal i128 fraction with positive denominator, ordered by value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Rational128 {
    num: i128,
    den: i128,
}

impl Rational128 {
    fn new(num: i128, den: i128) -> Self {
        let g = gcd(num.abs(), den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl PartialOrd for Rational128 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational128 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn graph(nodes: usize, edges: &[(usize, usize, i64, i64)]) -> WeightedGraph {
        let mut g = WeightedGraph::new(nodes, 0).unwrap();
        for &(s, t, r, m) in edges {
            g.add_edge(s, t, int(r), int(m), ()).unwrap();
        }
        g
    }

    #[test]
    fn unit_self_loop_is_stable_at_one() {
        let g = graph(1, &[(0, 0, 1, 1)]);
        assert!(verify_gain_stable(&g, int(1)).unwrap().is_stable());
        assert_eq!(
            verify_gain_stable(&g, rat(1, 2)).unwrap(),
            StabilityVerdict::Witness(vec![0])
        );
        assert_eq!(compute_gain(&g).unwrap(), Gain::Finite(int(1)));
    }

    #[test]
    fn negative_gamma_is_rejected() {
        let g = graph(1, &[(0, 0, 1, 1)]);
        assert_eq!(verify_gain_stable(&g, int(-1)), Err(GainError::NegativeGamma));
    }

    #[test]
    fn gain_takes_the_worst_reachable_cycle() {
        // Two reachable cycles with ratios 1/2 and 3/4, one unreachable cycle of ratio 5.
        let g = graph(
            5,
            &[
                (0, 1, 0, 0),
                (1, 1, 2, 1),
                (0, 2, 0, 0),
                (2, 3, 2, 1),
                (3, 2, 2, 2),
                (4, 4, 1, 5),
            ],
        );
        let (gain, witness) = compute_gain_witnessed(&g).unwrap();
        assert_eq!(gain, Gain::Finite(rat(3, 4)));
        let c = witness.unwrap();
        assert!(g.is_cycle(&c));
        assert_eq!(g.cycle_sum(&c, |e| e.mu) / g.cycle_sum(&c, |e| e.rho), rat(3, 4));
    }

    #[test]
    fn zero_rho_cycle_with_output_is_unbounded() {
        let g = graph(2, &[(0, 1, 1, 0), (1, 1, 0, 1)]);
        assert_eq!(compute_gain(&g).unwrap(), Gain::Infinite);
    }

    #[test]
    fn acyclic_graph_has_zero_gain() {
        let g = graph(3, &[(0, 1, 1, 4), (1, 2, 0, 3)]);
        assert_eq!(compute_gain(&g).unwrap(), Gain::Finite(int(0)));
        assert!(max_cycle_mean(&g, |e| e.mu).is_none());
    }

    #[test]
    fn negative_weights_violate_the_precondition() {
        let g = graph(1, &[(0, 0, 1, -1)]);
        assert_eq!(compute_gain(&g), Err(GainError::NegativeWeight));
    }

    #[test]
    fn large_and_fractional_gains_are_exact() {
        let g = graph(2, &[(0, 1, 3, 1000), (1, 0, 4, 1)]);
        assert_eq!(compute_gain(&g).unwrap(), Gain::Finite(rat(1001, 7)));
        let mut g: WeightedGraph = WeightedGraph::new(1, 0).unwrap();
        g.add_edge(0, 0, rat(7, 3), rat(2, 5), ()).unwrap();
        assert_eq!(compute_gain(&g).unwrap(), Gain::Finite(rat(6, 35)));
    }

    #[test]
    fn karp_on_small_cycles() {
        let g = graph(1, &[(0, 0, 0, 0)]);
        assert_eq!(max_cycle_mean(&g, |e| e.mu).unwrap().mean, int(0));
        let g = graph(3, &[(0, 1, 0, 1), (1, 2, 0, 0), (2, 0, 0, 0)]);
        let m = max_cycle_mean(&g, |e| e.mu).unwrap();
        assert_eq!(m.mean, rat(1, 3));
        assert_eq!(m.cycle.len(), 3);
    }

    #[test]
    fn karp_handles_negative_weights() {
        let g = graph(2, &[(0, 0, 0, -3), (0, 1, 0, 0), (1, 1, 0, -1)]);
        let m = max_cycle_mean(&g, |e| e.mu).unwrap();
        assert_eq!(m.mean, int(-1));
        assert_eq!(m.cycle, vec![2]);
    }
}
