//! Simple undirected graphs over agents.
//!
//! Vertices are `0..n`. Besides components and hop distances this module
//! holds the two vertex-cover routines used by the hidden-envy algorithms and
//! the named families that appear in the constructions.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

pub type VertexSet = BTreeSet<usize>;

/// Default vertex bound for [`Graph::min_vertex_cover_exact`].
pub const EXACT_COVER_BOUND: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<VertexSet>,
}

impl Graph {
    /// Rejects self-loops, duplicates (in either orientation) and
    /// out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) is out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if !g.edges.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            g.adj[u].insert(v);
            g.adj[v].insert(u);
        }
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: BTreeSet::new(), adj: vec![VertexSet::new(); n] }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::new(n, edges).expect("complete graph edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, v: usize) -> &VertexSet {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_independent(&self, set: &VertexSet) -> bool {
        set.iter().all(|&u| self.adj[u].is_disjoint(set))
    }

    pub fn is_vertex_cover(&self, cover: &VertexSet) -> bool {
        self.edges.iter().all(|(u, v)| cover.contains(u) || cover.contains(v))
    }

    /// Maximal connected vertex sets, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<VertexSet> {
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = VertexSet::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.insert(u);
                for &w in &self.adj[u] {
                    if !std::mem::replace(&mut seen[w], true) {
                        queue.push_back(w);
                    }
                }
            }
            components.push(comp);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() <= 1
    }

    /// Subgraph on `vertices`, keeping the original vertex numbering.
    pub fn restricted_to(&self, vertices: &VertexSet) -> Graph {
        let edges = self.edges().filter(|(u, v)| vertices.contains(u) && vertices.contains(v));
        Graph::new(self.n, edges).expect("subgraph of a valid graph")
    }

    /// Cover built from a greedy maximal matching: both endpoints of every
    /// matched edge. At most twice the optimum.
    pub fn vertex_cover_2approx(&self) -> VertexSet {
        let mut cover = VertexSet::new();
        for &(u, v) in &self.edges {
            if !cover.contains(&u) && !cover.contains(&v) {
                cover.insert(u);
                cover.insert(v);
            }
        }
        cover
    }

    pub fn min_vertex_cover_exact(&self) -> Result<VertexSet> {
        self.min_vertex_cover_bounded(EXACT_COVER_BOUND)
    }

    /// Branch and bound: pick an uncovered edge, branch on which endpoint
    /// joins the cover.
    pub fn min_vertex_cover_bounded(&self, bound: usize) -> Result<VertexSet> {
        if self.n > bound || self.n > 64 {
            return Err(Error::TooLarge { what: "graph for exact vertex cover", size: self.n, bound: bound.min(64) });
        }
        let edges: Vec<(usize, usize)> = self.edges().collect();
        let approx = self.vertex_cover_2approx();
        let mut best = approx.iter().fold(0u64, |acc, &v| acc | 1 << v);
        let mut best_size = approx.len() as u32;
        branch_cover(&edges, 0, &mut best, &mut best_size);
        Ok((0..self.n).filter(|v| best >> v & 1 == 1).collect())
    }

    /// Hop distances by Floyd-Warshall; `None` marks unreachable pairs.
    pub fn all_pairs_distance(&self) -> Vec<Vec<Option<usize>>> {
        let n = self.n;
        let mut dist = vec![vec![None; n]; n];
        for (v, row) in dist.iter_mut().enumerate() {
            row[v] = Some(0);
        }
        for &(u, v) in &self.edges {
            dist[u][v] = Some(1);
            dist[v][u] = Some(1);
        }
        for k in 0..n {
            for i in 0..n {
                let Some(ik) = dist[i][k] else { continue };
                for j in 0..n {
                    if let Some(kj) = dist[k][j] {
                        let through = ik + kj;
                        if dist[i][j].map_or(true, |d| through < d) {
                            dist[i][j] = Some(through);
                        }
                    }
                }
            }
        }
        dist
    }

    /// Largest finite distance, `None` for an empty graph.
    pub fn diameter(&self) -> Option<usize> {
        self.all_pairs_distance().into_iter().flatten().flatten().max()
    }
}

fn branch_cover(edges: &[(usize, usize)], chosen: u64, best: &mut u64, best_size: &mut u32) {
    let size = chosen.count_ones();
    if size >= *best_size {
        return;
    }
    let uncovered = edges.iter().find(|&&(u, v)| chosen >> u & 1 == 0 && chosen >> v & 1 == 0);
    match uncovered {
        None => {
            *best = chosen;
            *best_size = size;
        }
        Some(&(u, v)) => {
            // one more vertex is needed, so equal-size branches cannot improve
            if size + 1 >= *best_size {
                return;
            }
            branch_cover(edges, chosen | 1 << u, best, best_size);
            branch_cover(edges, chosen | 1 << v, best, best_size);
        }
    }
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn make_path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::BadSize("a path needs at least one vertex".into()));
    }
    Graph::new(n, (1..n).map(|v| (v - 1, v)))
}

/// Star `K_{1,n-1}` centred at vertex 0.
pub fn make_star(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::BadSize("a star needs at least one vertex".into()));
    }
    Graph::new(n, (1..n).map(|v| (0, v)))
}

/// Sizes of the three parts of the hidden-envy example graph:
/// `(star_leaves + 1, bridge, clique)` counted as `(ceil((n-1)/2), 1, floor((n-1)/2))`.
pub(crate) fn hiddennottight_parts(n: usize) -> (usize, usize) {
    let ceil = n / 2; // ceil((n-1)/2)
    let floor = (n - 1) / 2;
    (ceil, floor)
}

/// A star whose centre also reaches a clique through a single bridge vertex.
///
/// With `a = ceil((n-1)/2)` and `b = floor((n-1)/2)` (0-based labels):
/// centre `0`, leaves `1..a`, bridge `a`, clique `a+1..n`; the bridge touches
/// clique vertex `a+1`. This is the 1-based drawing shifted down by one.
pub fn make_hiddennottight_graph(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::BadSize(format!("hidden-envy example graph needs n >= 3, got {n}")));
    }
    let (a, _) = hiddennottight_parts(n);
    let bridge = a;
    let clique: Vec<usize> = (a + 1..n).collect();
    let mut edges: Vec<(usize, usize)> = (1..a).map(|leaf| (0, leaf)).collect();
    edges.push((0, bridge));
    edges.push((bridge, clique[0]));
    for (i, &u) in clique.iter().enumerate() {
        for &v in &clique[i + 1..] {
            edges.push((u, v));
        }
    }
    Graph::new(n, edges)
}
