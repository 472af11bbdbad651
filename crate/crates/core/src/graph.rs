//! Undirected topology graphs: construction, generators, vertex expansion,
//! boundaries, and maximum bipartite matchings.
//!
//! Graphs are immutable after construction. Neighbor lists are sorted
//! ascending so that every algorithm downstream iterates in a fixed order.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use rand::Rng;
use thiserror::Error;

use crate::rng::{stream, StreamId};

/// Exact fraction used for expansion ratios and matching bounds.
pub type Frac = Ratio<u64>;

/// Dense node index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {node} out of range for graph of {n} nodes")]
    OutOfRange { node: u64, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("graph of {n} nodes exceeds the exact-enumeration bound of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("bipartition sides overlap at node {0}")]
    OverlappingSides(NodeId),
    #[error("alpha {alpha} gives clique size {q}, outside [1, {n}]")]
    InvalidAlpha { alpha: Frac, q: u64, n: usize },
    #[error("no connected graph drawn after {0} attempts")]
    DisconnectedAfterRetries(usize),
    #[error("invalid cut: {0}")]
    InvalidCut(&'static str),
    #[error("malformed edge list: {0}")]
    BadEdgeList(String),
}

/// Largest `n` for which every cut is enumerated exactly.
pub const EXACT_EXPANSION_MAX_N: usize = 24;
/// Largest `n` for which the Lemma-style gamma report enumerates every cut.
pub const GAMMA_CHECK_MAX_N: usize = 16;
/// Default number of sampled cuts for the expansion estimate on big graphs.
pub const EXPANSION_SAMPLE_COUNT: usize = 20_000;

/// Immutable undirected graph with sorted adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
}

/// A cut `S ⊂ V` with `1 ≤ |S| ≤ ⌈n/2⌉`.
///
/// The upper bound follows the range convention `|S| ∈ [n/2]`, i.e. the
/// integers `1..⌈n/2⌉`, which for odd `n` admits sets one node larger than
/// `n/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    nodes: BTreeSet<NodeId>,
}

impl Cut {
    pub fn new(g: &Graph, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self, GraphError> {
        let nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        if nodes.is_empty() {
            return Err(GraphError::InvalidCut("cut is empty"));
        }
        if let Some(&worst) = nodes.iter().next_back() {
            if worst.index() >= g.n {
                return Err(GraphError::OutOfRange {
                    node: u64::from(worst.0),
                    n: g.n,
                });
            }
        }
        if nodes.len() >= g.n {
            return Err(GraphError::InvalidCut("cut must be a strict subset"));
        }
        if nodes.len() > g.n.div_ceil(2) {
            return Err(GraphError::InvalidCut("cut larger than ⌈n/2⌉"));
        }
        Ok(Cut { nodes })
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Graph {
    /// Builds a graph from an explicit edge list.
    ///
    /// Endpoint order within a pair does not matter; duplicates (in either
    /// orientation) and self-loops are rejected.
    pub fn from_edge_list(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        assert!(n <= u32::MAX as usize, "node ids are 32-bit");
        let mut normalized: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for e in [a, b] {
                if e as usize >= n {
                    return Err(GraphError::OutOfRange {
                        node: u64::from(e),
                        n,
                    });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(NodeId(a)));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            normalized.push((NodeId(lo), NodeId(hi)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adj[u.index()].push(v);
            adj[v.index()].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: normalized,
            adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges normalized as `(lo, hi)`, sorted.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n as u32).map(NodeId)
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u.index()]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u.index()].binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// The outside boundary `∂S = {v ∈ V∖S : N(v) ∩ S ≠ ∅}`.
    pub fn boundary(&self, cut: &Cut) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for v in self.nodes() {
            if cut.nodes.contains(&v) {
                continue;
            }
            if self.neighbors(v).iter().any(|u| cut.nodes.contains(u)) {
                out.insert(v);
            }
        }
        out
    }

    /// Per-node adjacency bitmasks, only valid for `n ≤ 32`.
    fn adjacency_masks(&self) -> Vec<u32> {
        let mut masks = vec![0u32; self.n];
        for &(u, v) in &self.edges {
            masks[u.index()] |= 1 << v.0;
            masks[v.index()] |= 1 << u.0;
        }
        masks
    }

    fn ratio_for_mask(&self, masks: &[u32], s_mask: u32) -> Frac {
        let mut boundary = 0u64;
        for (v, mask) in masks.iter().enumerate() {
            let bit = 1u32 << v;
            if s_mask & bit == 0 && mask & s_mask != 0 {
                boundary += 1;
            }
        }
        Frac::new(boundary, u64::from(s_mask.count_ones()))
    }

    /// Exact vertex expansion `α = min |∂S|/|S|` over all cuts with
    /// `|S| ∈ [n/2]`, together with one minimizing cut.
    ///
    /// Enumerates all `2^n` subsets; refuses graphs larger than
    /// [`EXACT_EXPANSION_MAX_N`].
    pub fn vertex_expansion_exact(&self) -> Result<(Frac, Cut), GraphError> {
        if self.n > EXACT_EXPANSION_MAX_N {
            return Err(GraphError::TooLarge {
                n: self.n,
                max: EXACT_EXPANSION_MAX_N,
            });
        }
        if self.n < 2 {
            return Err(GraphError::TooLarge { n: self.n, max: 1 });
        }
        let masks = self.adjacency_masks();
        let max_size = self.n.div_ceil(2) as u32;
        let mut best: Option<(Frac, u32)> = None;
        for s_mask in 1u32..(1u32 << self.n) {
            let size = s_mask.count_ones();
            if size > max_size {
                continue;
            }
            let ratio = self.ratio_for_mask(&masks, s_mask);
            let better = match &best {
                None => true,
                Some((b, _)) => ratio < *b,
            };
            if better {
                best = Some((ratio, s_mask));
            }
        }
        let (alpha, mask) = best.expect("n >= 2 guarantees at least one cut");
        let nodes = (0..self.n as u32).filter(|v| mask & (1 << v) != 0).map(NodeId);
        Ok((alpha, Cut::new(self, nodes)?))
    }

    /// Minimum `|∂S|/|S|` over `samples` randomly drawn cuts.
    ///
    /// This is an upper estimate of the true expansion (the minimizer may be
    /// missed); it is useful for checking claimed lower bounds on graphs too
    /// large for [`Graph::vertex_expansion_exact`].
    pub fn vertex_expansion_sampled(&self, samples: usize, seed: u64) -> Frac {
        assert!(self.n >= 2, "sampled expansion needs at least two nodes");
        let mut rng = stream(seed, StreamId::GraphGen);
        let max_size = self.n.div_ceil(2);
        let mut best: Option<Frac> = None;
        let mut scratch: Vec<NodeId> = self.nodes().collect();
        for _ in 0..samples {
            let size = rng.gen_range(1..=max_size);
            // Partial Fisher-Yates: the first `size` entries become S.
            for i in 0..size {
                let j = rng.gen_range(i..self.n);
                scratch.swap(i, j);
            }
            let cut = Cut::new(self, scratch[..size].iter().copied())
                .expect("sampled cut is always valid");
            let boundary = self.boundary(&cut).len() as u64;
            let ratio = Frac::new(boundary, size as u64);
            if best.is_none_or(|b| ratio < b) {
                best = Some(ratio);
            }
        }
        best.expect("samples > 0")
    }

    /// Maximum-cardinality matching between `left` and `right` using only
    /// graph edges with one endpoint on each side.
    ///
    /// Deterministic: augmenting paths are explored in ascending node order.
    pub fn max_bipartite_matching(
        &self,
        left: &BTreeSet<NodeId>,
        right: &BTreeSet<NodeId>,
    ) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
        if let Some(&shared) = left.intersection(right).next() {
            return Err(GraphError::OverlappingSides(shared));
        }
        let edges: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if left.contains(&a) && right.contains(&b) {
                    Some((a, b))
                } else if left.contains(&b) && right.contains(&a) {
                    Some((b, a))
                } else {
                    None
                }
            })
            .collect();
        Ok(max_matching_over_edges(&edges))
    }
}

/// Maximum matching over an explicit bipartite edge list `(left, right)`.
///
/// Repeated augmenting-path search, scanning left nodes and their edges in
/// ascending order; quadratic in the worst case, which is fine at desk scale.
pub fn max_matching_over_edges(edges: &[(NodeId, NodeId)]) -> Vec<(NodeId, NodeId)> {
    let mut left_nodes: Vec<NodeId> = edges.iter().map(|e| e.0).collect();
    left_nodes.sort_unstable();
    left_nodes.dedup();
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); left_nodes.len()];
    for &(l, r) in edges {
        let li = left_nodes.binary_search(&l).unwrap();
        adj[li].push(r);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    // match_of_right: right node -> index into left_nodes
    let mut match_of_right: std::collections::BTreeMap<NodeId, usize> =
        std::collections::BTreeMap::new();

    fn augment(
        li: usize,
        adj: &[Vec<NodeId>],
        match_of_right: &mut std::collections::BTreeMap<NodeId, usize>,
        visited: &mut BTreeSet<NodeId>,
    ) -> bool {
        for &r in &adj[li] {
            if !visited.insert(r) {
                continue;
            }
            let taken = match_of_right.get(&r).copied();
            match taken {
                None => {
                    match_of_right.insert(r, li);
                    return true;
                }
                Some(other) => {
                    if augment(other, adj, match_of_right, visited) {
                        match_of_right.insert(r, li);
                        return true;
                    }
                }
            }
        }
        false
    }

    for li in 0..left_nodes.len() {
        let mut visited = BTreeSet::new();
        augment(li, &adj, &mut match_of_right, &mut visited);
    }

    let mut out: Vec<(NodeId, NodeId)> = match_of_right
        .into_iter()
        .map(|(r, li)| (left_nodes[li], r))
        .collect();
    out.sort_unstable();
    out
}

/// Result of the exhaustive `γ ≥ α/4` check.
#[derive(Debug, Clone)]
pub struct GammaReport {
    pub alpha: Frac,
    /// `min ν(B(S))/|S|` over every cut, where `ν` is the maximum matching
    /// size over the bipartite graph induced by the cut.
    pub gamma: Frac,
    pub gamma_cut: Cut,
    pub holds: bool,
}

/// Checks `γ ≥ α/4` by enumerating every cut of the graph.
///
/// For each `S` with `|S| ∈ [n/2]` the maximum matching over the bipartite
/// graph `B(S)` between `S` and `V∖S` is computed exactly; `γ` is the
/// minimum of `ν(B(S))/|S|`.
pub fn check_gamma_bound(g: &Graph) -> Result<GammaReport, GraphError> {
    if g.n > GAMMA_CHECK_MAX_N {
        return Err(GraphError::TooLarge {
            n: g.n,
            max: GAMMA_CHECK_MAX_N,
        });
    }
    if g.n < 2 {
        return Err(GraphError::TooLarge { n: g.n, max: 1 });
    }
    let (alpha, _) = g.vertex_expansion_exact()?;
    let max_size = g.n.div_ceil(2) as u32;
    let mut best: Option<(Frac, u32)> = None;
    for s_mask in 1u32..(1u32 << g.n) {
        let size = s_mask.count_ones();
        if size > max_size {
            continue;
        }
        let crossing: Vec<(NodeId, NodeId)> = g
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                let a_in = s_mask & (1 << a.0) != 0;
                let b_in = s_mask & (1 << b.0) != 0;
                match (a_in, b_in) {
                    (true, false) => Some((a, b)),
                    (false, true) => Some((b, a)),
                    _ => None,
                }
            })
            .collect();
        let m = max_matching_over_edges(&crossing).len() as u64;
        let ratio = Frac::new(m, u64::from(size));
        if best.is_none_or(|(b, _)| ratio < b) {
            best = Some((ratio, s_mask));
        }
    }
    let (gamma, mask) = best.expect("n >= 2 guarantees at least one cut");
    let nodes = (0..g.n as u32).filter(|v| mask & (1 << v) != 0).map(NodeId);
    Ok(GammaReport {
        alpha,
        gamma,
        gamma_cut: Cut::new(g, nodes)?,
        holds: gamma >= alpha / Frac::from_integer(4),
    })
}

/// A star-clique graph: a `q`-clique with every remaining node attached to
/// all clique nodes and nothing else.
#[derive(Debug, Clone)]
pub struct StarClique {
    pub graph: Graph,
    pub q: usize,
    pub alpha: Frac,
}

/// Builds the star-clique with `q = round(n·alpha)` (half rounds up).
///
/// `alpha` must lie in `[1/n, 1/2]` and the resulting `q` in `[1, n]`.
/// With `q = 1` this is a star, with `q = n` a clique.
pub fn gen_star_clique(n: usize, alpha: Frac) -> Result<StarClique, GraphError> {
    let lo = Frac::new(1, n as u64);
    let hi = Frac::new(1, 2);
    let q_frac = alpha * Frac::from_integer(n as u64) + Frac::new(1, 2);
    let q = q_frac.floor().to_integer();
    if alpha < lo || alpha > hi || q < 1 || q > n as u64 {
        return Err(GraphError::InvalidAlpha { alpha, q, n });
    }
    let q = q as usize;
    let mut edges = Vec::new();
    for i in 0..q as u32 {
        for j in (i + 1)..q as u32 {
            edges.push((i, j));
        }
    }
    for outside in q as u32..n as u32 {
        for inside in 0..q as u32 {
            edges.push((inside, outside));
        }
    }
    Ok(StarClique {
        graph: Graph::from_edge_list(n, &edges)?,
        q,
        alpha,
    })
}

/// Exact expansion of a star-clique, by its cut structure.
///
/// Outside-only cuts give `q/min(n−q, ⌈n/2⌉)`; any cut touching the clique
/// has the whole rest of the graph as boundary, giving at best
/// `⌊n/2⌋/⌈n/2⌉`.
pub fn star_clique_alpha(n: usize, q: usize) -> Frac {
    let half_up = n.div_ceil(2) as u64;
    let half_down = (n / 2) as u64;
    let mixed = Frac::new(half_down, half_up);
    if n == q {
        return mixed;
    }
    let outside = (n - q).min(n.div_ceil(2)) as u64;
    let outside_only = Frac::new(q as u64, outside);
    outside_only.min(mixed)
}

/// Ring on `n ≥ 3` nodes (for `n = 2`, the single edge).
pub fn gen_ring(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooLarge { n, max: 1 });
    }
    if n == 2 {
        return Graph::from_edge_list(2, &[(0, 1)]);
    }
    let edges: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
    Graph::from_edge_list(n, &edges)
}

pub fn gen_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooLarge { n, max: 1 });
    }
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            edges.push((i, j));
        }
    }
    Graph::from_edge_list(n, &edges)
}

const CONNECTED_RETRIES: usize = 1000;

/// Erdős–Rényi `G(n, p)`, redrawn until connected.
pub fn gen_random_connected(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    assert!(p > 0.0 && p <= 1.0, "edge probability must be in (0, 1]");
    if n < 2 {
        return Err(GraphError::TooLarge { n, max: 1 });
    }
    let mut rng = stream(seed, StreamId::GraphGen);
    for _ in 0..CONNECTED_RETRIES {
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_edge_list(n, &edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::DisconnectedAfterRetries(CONNECTED_RETRIES))
}

// ---------------------------------------------------------------------------
// Edge-list text format: first line `n m`, then `m` lines `u v`.
// ---------------------------------------------------------------------------

pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| GraphError::BadEdgeList("empty input".into()))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphError::BadEdgeList("bad node count".into()))?;
    let m: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphError::BadEdgeList("bad edge count".into()))?;
    let mut edges = Vec::with_capacity(m);
    for line in lines {
        let mut parts = line.split_whitespace();
        let u: u32 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::BadEdgeList(format!("bad edge line: {line}")))?;
        let v: u32 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::BadEdgeList(format!("bad edge line: {line}")))?;
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(GraphError::BadEdgeList(format!(
            "header promises {m} edges, found {}",
            edges.len()
        )));
    }
    Graph::from_edge_list(n, &edges)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.node_count(), g.edge_count());
    for &(u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

/// True when every cut satisfies `ν(B(S)) ≥ (α/4)·|S|`; `check_gamma_bound`
/// reports the extremal cut, this helper just answers the question.
pub fn gamma_bound_holds(g: &Graph) -> Result<bool, GraphError> {
    Ok(check_gamma_bound(g)?.holds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: u64, d: u64) -> Frac {
        Frac::new(n, d)
    }

    // -- independent oracle: definition-literal expansion over subset
    //    enumeration, no bitmasks --
    fn naive_expansion(g: &Graph) -> Frac {
        let n = g.node_count();
        let max_size = n.div_ceil(2);
        let mut best: Option<Frac> = None;
        for size in 1..=max_size {
            for combo in combinations(n, size) {
                let cut = Cut::new(g, combo.into_iter().map(|i| NodeId(i as u32))).unwrap();
                let ratio = frac(g.boundary(&cut).len() as u64, cut.len() as u64);
                if best.is_none_or(|b| ratio < b) {
                    best = Some(ratio);
                }
            }
        }
        best.unwrap()
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    // -- independent oracle: brute-force maximum matching by subset search --
    fn brute_force_matching_size(edges: &[(NodeId, NodeId)]) -> usize {
        fn rec(edges: &[(NodeId, NodeId)], used: &mut BTreeSet<NodeId>) -> usize {
            let mut best = 0;
            for (i, &(l, r)) in edges.iter().enumerate() {
                if used.contains(&l) || used.contains(&r) {
                    continue;
                }
                used.insert(l);
                used.insert(r);
                best = best.max(1 + rec(&edges[i + 1..], used));
                used.remove(&l);
                used.remove(&r);
            }
            best
        }
        rec(edges, &mut BTreeSet::new())
    }

    fn star(leaves: usize) -> Graph {
        let edges: Vec<(u32, u32)> = (1..=leaves as u32).map(|l| (0, l)).collect();
        Graph::from_edge_list(leaves + 1, &edges).unwrap()
    }

    #[test]
    fn from_edge_list_single_edge() {
        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        assert_eq!(g.degree(NodeId(0)), 1);
        assert_eq!(g.degree(NodeId(1)), 1);
    }

    #[test]
    fn from_edge_list_triangle() {
        let g = Graph::from_edge_list(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn from_edge_list_rejects_self_loop() {
        assert_eq!(
            Graph::from_edge_list(3, &[(0, 0)]),
            Err(GraphError::SelfLoop(NodeId(0)))
        );
    }

    #[test]
    fn from_edge_list_rejects_duplicates_and_range() {
        assert_eq!(
            Graph::from_edge_list(3, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(NodeId(0), NodeId(1)))
        );
        assert_eq!(
            Graph::from_edge_list(2, &[(0, 2)]),
            Err(GraphError::OutOfRange { node: 2, n: 2 })
        );
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let g = gen_random_connected(12, 0.4, 3).unwrap();
        for u in g.nodes() {
            let mut sorted = g.neighbors(u).to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, g.neighbors(u));
            for &v in g.neighbors(u) {
                assert!(g.neighbors(v).contains(&u));
            }
        }
    }

    #[test]
    fn boundary_on_clique_path_star() {
        let k3 = gen_complete(3).unwrap();
        let cut = Cut::new(&k3, [NodeId(0)]).unwrap();
        assert_eq!(
            k3.boundary(&cut),
            BTreeSet::from([NodeId(1), NodeId(2)])
        );

        let path = Graph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        let cut = Cut::new(&path, [NodeId(0)]).unwrap();
        assert_eq!(path.boundary(&cut), BTreeSet::from([NodeId(1)]));

        // Star center 0 with leaves 1..4: N(1) ∪ N(2) = {0}, so ∂{1,2} = {0}.
        let g = star(4);
        let cut = Cut::new(&g, [NodeId(1), NodeId(2)]).unwrap();
        assert_eq!(g.boundary(&cut), BTreeSet::from([NodeId(0)]));
    }

    #[test]
    fn expansion_matches_naive_oracle_on_corpus() {
        let corpus: Vec<Graph> = vec![
            gen_complete(4).unwrap(),
            gen_complete(5).unwrap(),
            star(5),
            gen_ring(6).unwrap(),
            gen_ring(7).unwrap(),
            Graph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap(),
            gen_random_connected(8, 0.4, 11).unwrap(),
            gen_random_connected(9, 0.3, 12).unwrap(),
            gen_star_clique(8, frac(1, 4)).unwrap().graph,
        ];
        for g in &corpus {
            let (alpha, cut) = g.vertex_expansion_exact().unwrap();
            assert_eq!(alpha, naive_expansion(g), "graph {g:?}");
            // The returned cut realizes the minimum.
            let realized = frac(g.boundary(&cut).len() as u64, cut.len() as u64);
            assert_eq!(realized, alpha);
        }
    }

    #[test]
    fn expansion_known_values() {
        // K_4: every 2-cut has the other 2 nodes as boundary.
        let (a, _) = gen_complete(4).unwrap().vertex_expansion_exact().unwrap();
        assert_eq!(a, frac(1, 1));
        // Star with 5 leaves (n=6): S = 3 leaves gives ∂S = {center}.
        let (a, cut) = star(5).vertex_expansion_exact().unwrap();
        assert_eq!(a, frac(1, 3));
        assert_eq!(cut.len(), 3);
        assert!(!cut.nodes().contains(&NodeId(0)));
        // Single edge: only singleton cuts.
        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        assert_eq!(g.vertex_expansion_exact().unwrap().0, frac(1, 1));
        // K_5 under the [n/2] convention admits |S| = 3, giving 2/3.
        let (a, _) = gen_complete(5).unwrap().vertex_expansion_exact().unwrap();
        assert_eq!(a, frac(2, 3));
    }

    #[test]
    fn expansion_rejects_large_graphs() {
        let g = gen_ring(30).unwrap();
        assert!(matches!(
            g.vertex_expansion_exact(),
            Err(GraphError::TooLarge { .. })
        ));
    }

    #[test]
    fn matching_known_values() {
        // Complete bipartite 2x2.
        let g = Graph::from_edge_list(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let left = BTreeSet::from([NodeId(0), NodeId(1)]);
        let right = BTreeSet::from([NodeId(2), NodeId(3)]);
        assert_eq!(g.max_bipartite_matching(&left, &right).unwrap().len(), 2);

        // Star: all edges share the center.
        let g = star(3);
        let left = BTreeSet::from([NodeId(0)]);
        let right = BTreeSet::from([NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(g.max_bipartite_matching(&left, &right).unwrap().len(), 1);

        // K_4 split {0,1} vs {2,3}: oracle agrees it is 2.
        let g = gen_complete(4).unwrap();
        let left = BTreeSet::from([NodeId(0), NodeId(1)]);
        let right = BTreeSet::from([NodeId(2), NodeId(3)]);
        let m = g.max_bipartite_matching(&left, &right).unwrap();
        let crossing: Vec<(NodeId, NodeId)> = [(0u32, 2u32), (0, 3), (1, 2), (1, 3)]
            .iter()
            .map(|&(a, b)| (NodeId(a), NodeId(b)))
            .collect();
        assert_eq!(m.len(), brute_force_matching_size(&crossing));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn matching_rejects_overlapping_sides() {
        let g = gen_complete(3).unwrap();
        let left = BTreeSet::from([NodeId(0), NodeId(1)]);
        let right = BTreeSet::from([NodeId(1), NodeId(2)]);
        assert_eq!(
            g.max_bipartite_matching(&left, &right),
            Err(GraphError::OverlappingSides(NodeId(1)))
        );
    }

    #[test]
    fn matching_agrees_with_brute_force_on_random_graphs() {
        for seed in 0..30u64 {
            let g = gen_random_connected(8, 0.4, 100 + seed).unwrap();
            let left: BTreeSet<NodeId> = g.nodes().filter(|v| v.0 % 2 == 0).collect();
            let right: BTreeSet<NodeId> = g.nodes().filter(|v| v.0 % 2 == 1).collect();
            let m = g.max_bipartite_matching(&left, &right).unwrap();
            let crossing: Vec<(NodeId, NodeId)> = g
                .edges()
                .iter()
                .filter_map(|&(a, b)| {
                    if left.contains(&a) && right.contains(&b) {
                        Some((a, b))
                    } else if left.contains(&b) && right.contains(&a) {
                        Some((b, a))
                    } else {
                        None
                    }
                })
                .collect();
            assert_eq!(m.len(), brute_force_matching_size(&crossing));
            // Disjointness and side membership.
            let mut seen = BTreeSet::new();
            for &(l, r) in &m {
                assert!(left.contains(&l) && right.contains(&r));
                assert!(seen.insert(l) && seen.insert(r));
                assert!(g.has_edge(l, r));
            }
        }
    }

    #[test]
    fn gamma_bound_known_graphs() {
        let report = check_gamma_bound(&gen_complete(4).unwrap()).unwrap();
        assert!(report.holds);
        assert_eq!(report.gamma, frac(1, 1));
        assert_eq!(report.alpha, frac(1, 1));

        let report = check_gamma_bound(&star(5)).unwrap();
        assert!(report.holds);
        assert_eq!(report.alpha, frac(1, 3));
        assert!(report.gamma >= frac(1, 12));

        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        let report = check_gamma_bound(&g).unwrap();
        assert_eq!(report.gamma, frac(1, 1));
        assert!(report.holds);
    }

    #[test]
    fn gamma_bound_rejects_large() {
        assert!(matches!(
            check_gamma_bound(&gen_ring(17).unwrap()),
            Err(GraphError::TooLarge { .. })
        ));
    }

    #[test]
    fn star_clique_q1_is_star() {
        let sc = gen_star_clique(4, frac(1, 4)).unwrap();
        assert_eq!(sc.q, 1);
        assert_eq!(sc.graph.degree(NodeId(0)), 3);
        for v in 1..4u32 {
            assert_eq!(sc.graph.neighbors(NodeId(v)), &[NodeId(0)]);
        }
    }

    #[test]
    fn star_clique_q2_structure_and_expansion() {
        let sc = gen_star_clique(4, frac(1, 2)).unwrap();
        assert_eq!(sc.q, 2);
        assert!(sc.graph.has_edge(NodeId(0), NodeId(1)));
        for outside in [NodeId(2), NodeId(3)] {
            assert_eq!(sc.graph.neighbors(outside), &[NodeId(0), NodeId(1)]);
        }
        let (alpha, _) = sc.graph.vertex_expansion_exact().unwrap();
        assert!(alpha >= frac(1, 2));
    }

    #[test]
    fn star_clique_expansion_at_least_twice_alpha_by_sampling() {
        let sc = gen_star_clique(100, frac(1, 10)).unwrap();
        assert_eq!(sc.q, 10);
        let est = sc.graph.vertex_expansion_sampled(5_000, 42);
        assert!(est >= frac(2, 10), "sampled estimate {est} below 2α");
    }

    #[test]
    fn star_clique_exact_alpha_formula_matches_brute_force() {
        for (n, alpha) in [
            (6, frac(1, 6)),
            (6, frac(1, 3)),
            (8, frac(1, 4)),
            (9, frac(1, 3)),
            (10, frac(1, 5)),
            (12, frac(1, 2)),
            (13, frac(1, 4)),
        ] {
            let sc = gen_star_clique(n, alpha).unwrap();
            let (exact, _) = sc.graph.vertex_expansion_exact().unwrap();
            assert_eq!(exact, star_clique_alpha(n, sc.q), "n={n} q={}", sc.q);
            assert!(exact >= alpha);
        }
    }

    #[test]
    fn star_clique_degrees() {
        for (n, alpha) in [(12, frac(1, 4)), (16, frac(1, 2)), (20, frac(1, 10))] {
            let sc = gen_star_clique(n, alpha).unwrap();
            for v in sc.graph.nodes() {
                if v.index() < sc.q {
                    assert_eq!(sc.graph.degree(v), n - 1);
                } else {
                    assert_eq!(sc.graph.degree(v), sc.q);
                }
            }
            let (exact, _) = sc.graph.vertex_expansion_exact().unwrap();
            assert!(exact >= alpha);
        }
    }

    #[test]
    fn star_clique_invalid_alpha() {
        assert!(matches!(
            gen_star_clique(4, frac(3, 4)),
            Err(GraphError::InvalidAlpha { .. })
        ));
        assert!(matches!(
            gen_star_clique(10, frac(1, 100)),
            Err(GraphError::InvalidAlpha { .. })
        ));
    }

    #[test]
    fn generators_basic() {
        let ring = gen_ring(4).unwrap();
        assert_eq!(ring.max_degree(), 2);
        assert_eq!(ring.edge_count(), 4);

        let k5 = gen_complete(5).unwrap();
        assert_eq!(k5.max_degree(), 4);

        let a = gen_random_connected(10, 0.5, 1).unwrap();
        let b = gen_random_connected(10, 0.5, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
        let c = gen_random_connected(10, 0.5, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_random_connected(9, 0.35, 5).unwrap();
        let text = format_edge_list(&g);
        let parsed = parse_edge_list(&text).unwrap();
        assert_eq!(g, parsed);
        assert!(parse_edge_list("2 1\n0 0\n").is_err());
        assert!(parse_edge_list("2 3\n0 1\n").is_err());
    }

    #[test]
    fn cut_validation() {
        let g = gen_complete(4).unwrap();
        assert!(Cut::new(&g, []).is_err());
        assert!(Cut::new(&g, (0..4).map(NodeId)).is_err());
        assert!(Cut::new(&g, (0..3).map(NodeId)).is_err()); // > ceil(4/2)
        assert!(Cut::new(&g, [NodeId(5)]).is_err());
        assert!(Cut::new(&g, [NodeId(0), NodeId(3)]).is_ok());
    }
}
