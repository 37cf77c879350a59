//! Dinic max-flow on an s-t network with real capacities.

use std::collections::VecDeque;

/// Residual capacities at or below this are treated as saturated.
pub const SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
}

/// Directed network; terminals are `source()` and `sink()`.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    /// Arc `a` and `a ^ 1` are mutual reverses.
    out: Vec<Vec<usize>>,
    source: usize,
    sink: usize,
    work: u64,
}

impl FlowNetwork {
    /// Network with `n` inner nodes `0..n` plus the two terminals.
    pub fn new(n: usize) -> Self {
        FlowNetwork { arcs: Vec::new(), out: vec![Vec::new(); n + 2], source: n, sink: n + 1, work: 0 }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        debug_assert!(cap >= 0.0 && rev_cap >= 0.0);
        self.out[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap });
        self.out[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap: rev_cap });
    }

    /// Pushes the maximum flow and returns its value.
    pub fn max_flow(&mut self) -> f64 {
        let n = self.out.len();
        let mut total = 0.0;
        loop {
            let level = self.levels();
            if level[self.sink] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            loop {
                let pushed = self.augment(&level, &mut next);
                if pushed <= SLACK {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn levels(&mut self) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.out.len()];
        level[self.source] = 0;
        let mut queue = VecDeque::from([self.source]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.out[u] {
                self.work += 1;
                let arc = &self.arcs[a];
                if arc.cap > SLACK && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    /// Finds one blocking-flow path with an explicit stack and saturates it.
    fn augment(&mut self, level: &[usize], next: &mut [usize]) -> f64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = self.source;
        loop {
            if u == self.sink {
                let pushed = path.iter().map(|&a| self.arcs[a].cap).fold(f64::INFINITY, f64::min);
                for &a in &path {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                }
                return pushed;
            }
            let mut advanced = false;
            while next[u] < self.out[u].len() {
                let a = self.out[u][next[u]];
                self.work += 1;
                let arc = &self.arcs[a];
                if arc.cap > SLACK && level[arc.to] == level[u] + 1 {
                    path.push(a);
                    u = arc.to;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the arc that led here
                match path.pop() {
                    None => return 0.0,
                    Some(a) => {
                        u = self.arcs[a ^ 1].to;
                        next[u] += 1;
                    }
                }
            }
        }
    }

    /// Nodes reachable from the source in the residual graph.
    pub fn source_side(&self) -> Vec<bool> {
        let mut seen = vec![false; self.out.len()];
        seen[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(u) = stack.pop() {
            for &a in &self.out[u] {
                let arc = &self.arcs[a];
                if arc.cap > SLACK && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }

    /// Arc visits so far; a deterministic effort measure.
    pub fn work(&self) -> u64 {
        self.work
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum over all 2^n cuts with the source on side S.
    fn enumerated_min_cut(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
        let (s, t) = (n, n + 1);
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << n) {
            let in_s = |v: usize| v == s || (v != t && mask >> v & 1 == 1);
            let cut: f64 = edges.iter().filter(|&&(u, v, _)| in_s(u) && !in_s(v)).map(|e| e.2).sum();
            best = best.min(cut);
        }
        best
    }

    #[test]
    fn textbook_network() {
        let mut g = FlowNetwork::new(2);
        let (s, t) = (g.source(), g.sink());
        g.add_edge(s, 0, 4.0, 0.0);
        g.add_edge(s, 1, 2.0, 0.0);
        g.add_edge(0, 1, 3.0, 0.0);
        g.add_edge(0, t, 1.0, 0.0);
        g.add_edge(1, t, 5.0, 0.0);
        assert!((g.max_flow() - 6.0).abs() < 1e-12);
        let side = g.source_side();
        assert!(side[s] && !side[t]);
    }

    #[test]
    fn disconnected_is_zero() {
        let mut g = FlowNetwork::new(1);
        let s = g.source();
        g.add_edge(s, 0, 3.0, 0.0);
        assert_eq!(g.max_flow(), 0.0);
    }

    fn arb_network() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
        (1usize..=8).prop_flat_map(|n| {
            let edge = (0..n + 2, 0..n + 2, 0.0f64..10.0);
            (Just(n), proptest::collection::vec(edge, 0..30))
        })
    }

    proptest! {
        #[test]
        fn flow_equals_enumerated_min_cut((n, raw) in arb_network()) {
            let edges: Vec<_> = raw.into_iter().filter(|&(u, v, _)| u != v).collect();
            let mut g = FlowNetwork::new(n);
            for &(u, v, c) in &edges {
                g.add_edge(u, v, c, 0.0);
            }
            let flow = g.max_flow();
            let cut = enumerated_min_cut(n, &edges);
            prop_assert!((flow - cut).abs() <= 1e-9 * (1.0 + cut), "flow {} cut {}", flow, cut);
            let side = g.source_side();
            let (s, t) = (n, n + 1);
            prop_assert!(!side[t]);
            let residual_cut: f64 = edges.iter().filter(|&&(u, v, _)| side[u] && !side[v]).map(|e| e.2).sum();
            prop_assert!((residual_cut - cut).abs() <= 1e-9 * (1.0 + cut));
            prop_assert!(side[s]);
        }
    }
}
