use alloc::vec;
use alloc::vec::Vec;

use super::GainError;
use crate::rational::Rational;

/// A directed edge carrying an input weight (`rho`) and an output weight (`mu`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedEdge<L = ()> {
    pub source: usize,
    pub target: usize,
    pub rho: Rational,
    pub mu: Rational,
    pub label: L,
}

/// Finite graph with a designated initial node; the substrate for all cycle
/// analysis. Nodes are `0..node_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph<L = ()> {
    node_count: usize,
    initial: usize,
    edges: Vec<WeightedEdge<L>>,
}

/// A cycle given as the indices of its edges, in traversal order.
pub type Cycle = Vec<usize>;

impl<L> WeightedGraph<L> {
    pub fn new(node_count: usize, initial: usize) -> Result<Self, GainError> {
        if initial >= node_count {
            return Err(GainError::MalformedGraph);
        }
        Ok(Self {
            node_count,
            initial,
            edges: Vec::new(),
        })
    }

    pub fn add_edge(
        &mut self,
        source: usize,
        target: usize,
        rho: Rational,
        mu: Rational,
        label: L,
    ) -> Result<usize, GainError> {
        if source >= self.node_count || target >= self.node_count {
            return Err(GainError::MalformedGraph);
        }
        self.edges.push(WeightedEdge {
            source,
            target,
            rho,
            mu,
            label,
        });
        Ok(self.edges.len() - 1)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn edges(&self) -> &[WeightedEdge<L>] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &WeightedEdge<L> {
        &self.edges[index]
    }

    /// Nodes reachable from the initial node.
    pub fn reachable(&self) -> Vec<bool> {
        let adjacency = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(node) = stack.pop() {
            for &e in &adjacency[node] {
                let t = self.edges[e].target;
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.source].push(i);
        }
        out
    }

    /// Edge indices whose source is reachable (and therefore so is the target).
    pub(crate) fn reachable_edges(&self) -> Vec<usize> {
        let seen = self.reachable();
        (0..self.edges.len())
            .filter(|&i| seen[self.edges[i].source])
            .collect()
    }

    /// Sum of a per-edge quantity along a cycle.
    pub fn cycle_sum(&self, cycle: &[usize], weight: impl Fn(&WeightedEdge<L>) -> Rational) -> Rational {
        cycle
            .iter()
            .fold(Rational::from_integer(0), |acc, &e| acc + weight(&self.edges[e]))
    }

    /// True when `cycle` is a closed walk over edges of this graph.
    pub fn is_cycle(&self, cycle: &[usize]) -> bool {
        if cycle.is_empty() || cycle.iter().any(|&e| e >= self.edges.len()) {
            return false;
        }
        cycle
            .iter()
            .zip(cycle.iter().cycle().skip(1))
            .all(|(&a, &b)| self.edges[a].target == self.edges[b].source)
    }
}

/// Integer-weighted view used by the cycle algorithms.
pub(crate) struct IntView<'a> {
    pub node_count: usize,
    /// (source, target, edge index) for every reachable edge.
    pub edges: Vec<(usize, usize, usize)>,
    pub weights: &'a [i128],
}

pub(crate) enum BellmanFord {
    NegativeCycle(Cycle),
    Potentials(Vec<i128>),
}

impl IntView<'_> {
    /// Shortest distances from a virtual source attached to every node, or a
    /// negative cycle when one exists among the view's edges.
    pub fn bellman_ford(&self) -> BellmanFord {
        let n = self.node_count;
        let mut dist = vec![0i128; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut last_relaxed = None;
        for _ in 0..=n {
            last_relaxed = None;
            for &(s, t, e) in &self.edges {
                let candidate = dist[s] + self.weights[e];
                if candidate < dist[t] {
                    dist[t] = candidate;
                    pred[t] = Some(e);
                    last_relaxed = Some(t);
                }
            }
            if last_relaxed.is_none() {
                return BellmanFord::Potentials(dist);
            }
        }
        // A relaxation in round n+1 means the predecessor chain closes a cycle.
        let mut node = last_relaxed.expect("relaxation recorded");
        let mut sources = vec![None; self.weights.len()];
        for &(s, _, e) in &self.edges {
            sources[e] = Some(s);
        }
        let source_of = |e: usize| sources[e];
        for _ in 0..n {
            let e = pred[node].expect("relaxed node has a predecessor");
            node = source_of(e).expect("edge in view");
        }
        let start = node;
        let mut cycle = Vec::new();
        loop {
            let e = pred[node].expect("cycle node has a predecessor");
            cycle.push(e);
            node = source_of(e).expect("edge in view");
            if node == start {
                break;
            }
        }
        cycle.reverse();
        BellmanFord::NegativeCycle(cycle)
    }

    /// Finds a cycle made of tight edges (`dist[s] + w == dist[t]`) that
    /// contains at least one edge accepted by `marked`. With valid potentials
    /// the tight cycles are exactly the zero-weight cycles.
    pub fn tight_cycle(&self, dist: &[i128], marked: impl Fn(usize) -> bool) -> Option<Cycle> {
        let tight: Vec<(usize, usize, usize)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(s, t, e)| dist[s] + self.weights[e] == dist[t])
            .collect();
        let comp = scc(self.node_count, &tight);
        let anchor = tight
            .iter()
            .find(|&&(s, t, e)| comp[s] == comp[t] && marked(e))?;
        let (s, t, e) = *anchor;
        // Path t -> s inside the component closes the cycle through the anchor.
        let mut back = Vec::new();
        if t != s {
            back = bfs_path(self.node_count, &tight, t, s, |x| comp[x] == comp[s])?;
        }
        let mut cycle = vec![e];
        cycle.extend(back);
        Some(cycle)
    }
}

/// Breadth-first path of edge indices from `from` to `to`, restricted to
/// nodes accepted by `allowed`.
pub(crate) fn bfs_path(
    node_count: usize,
    edges: &[(usize, usize, usize)],
    from: usize,
    to: usize,
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let mut out = vec![Vec::new(); node_count];
    for &(s, t, e) in edges {
        out[s].push((t, e));
    }
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; node_count];
    let mut seen = vec![false; node_count];
    let mut queue = alloc::collections::VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(t, e) in &out[node] {
            if !seen[t] && allowed(t) {
                seen[t] = true;
                prev[t] = Some((node, e));
                queue.push_back(t);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let (p, e) = prev[node]?;
        path.push(e);
        node = p;
    }
    path.reverse();
    Some(path)
}

/// Strongly connected components (iterative Tarjan). Returns a component id
/// per node; ids are in reverse topological order of the condensation.
pub(crate) fn scc(node_count: usize, edges: &[(usize, usize, usize)]) -> Vec<usize> {
    let mut out = vec![Vec::new(); node_count];
    for &(s, t, _) in edges {
        out[s].push(t);
    }
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; node_count];
    let mut low = vec![0usize; node_count];
    let mut on_stack = vec![false; node_count];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; node_count];
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..node_count {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (node, ref mut child)) = call.last_mut() {
            if let Some(&next) = out[node].get(*child) {
                *child += 1;
                if index[next] == UNSEEN {
                    index[next] = next_index;
                    low[next] = next_index;
                    next_index += 1;
                    stack.push(next);
                    on_stack[next] = true;
                    call.push((next, 0));
                } else if on_stack[next] {
                    low[node] = low[node].min(index[next]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[node]);
                }
                if low[node] == index[node] {
                    while let Some(member) = stack.pop() {
                        on_stack[member] = false;
                        comp[member] = next_comp;
                        if member == node {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn rejects_dangling_edges() {
        let mut g: WeightedGraph = WeightedGraph::new(2, 0).unwrap();
        assert_eq!(
            g.add_edge(0, 2, int(0), int(0), ()),
            Err(GainError::MalformedGraph)
        );
        assert!(WeightedGraph::<()>::new(2, 2).is_err());
    }

    #[test]
    fn reachability_ignores_isolated_nodes() {
        let mut g: WeightedGraph = WeightedGraph::new(3, 0).unwrap();
        g.add_edge(0, 1, int(0), int(0), ()).unwrap();
        g.add_edge(2, 2, int(0), int(0), ()).unwrap();
        assert_eq!(g.reachable(), vec![true, true, false]);
        assert_eq!(g.reachable_edges(), vec![0]);
    }

    #[test]
    fn scc_groups_cycles() {
        let edges = [(0, 1, 0), (1, 0, 1), (1, 2, 2)];
        let comp = scc(3, &edges);
        assert_eq!(comp[0], comp[1]);
        assert_ne!(comp[1], comp[2]);
    }
}
