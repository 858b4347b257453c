//! Regular (multi)graphs stored as per-vertex edge-end lists.
//!
//! Every vertex owns exactly `d` edge-ends. Entry `k` of `neighbors(v)` is the
//! vertex at the far end of the `k`-th edge-end of `v`, so a loop at `v` shows
//! up twice in `neighbors(v)` and a triple edge `{u, v}` shows up three times.
//! This is the projection of a clone matching, slot by slot.
//!
//! Vertex ids are 0-based in this API. File formats and the CLI are 1-based.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Vertex id, 0-based.
pub type Vertex = u32;

/// Immutable d-regular multigraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    d: usize,
    ends: Vec<Vertex>,
    simple: bool,
}

impl Graph {
    /// Builds a graph from a flat edge-end array of length `n * d`.
    ///
    /// The array must be symmetric as a multiset: `u` occurs in the list of
    /// `v` as often as `v` occurs in the list of `u`, and every vertex occurs
    /// an even number of times in its own list.
    pub fn from_edge_ends(n: usize, d: usize, ends: Vec<Vertex>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one vertex"));
        }
        if d == 0 {
            return Err(invalid("degree must be positive"));
        }
        if !(n * d).is_multiple_of(2) {
            return Err(invalid("n * d must be even"));
        }
        if ends.len() != n * d {
            return Err(invalid("edge-end array must have length n * d"));
        }
        if let Some(&bad) = ends.iter().find(|&&u| u as usize >= n) {
            return Err(Error::VertexOutOfRange { vertex: bad as usize, n });
        }

        let mut sorted = ends.clone();
        for v in 0..n {
            sorted[v * d..(v + 1) * d].sort_unstable();
        }
        let count = |v: usize, u: Vertex| -> usize {
            let row = &sorted[v * d..(v + 1) * d];
            row.partition_point(|&x| x <= u) - row.partition_point(|&x| x < u)
        };

        let mut simple = true;
        for v in 0..n {
            let row = &sorted[v * d..(v + 1) * d];
            let mut i = 0;
            while i < d {
                let u = row[i];
                let mut j = i;
                while j < d && row[j] == u {
                    j += 1;
                }
                let mult = j - i;
                if u as usize == v {
                    simple = false;
                    if mult % 2 != 0 {
                        return Err(invalid("a loop must contribute two edge-ends"));
                    }
                } else {
                    if mult > 1 {
                        simple = false;
                    }
                    if count(u as usize, v as Vertex) != mult {
                        return Err(invalid("adjacency is not symmetric"));
                    }
                }
                i = j;
            }
        }
        Ok(Self { n, d, ends: sorted, simple })
    }

    /// Builds a d-regular graph from undirected edges listed once each.
    /// A loop `(v, v)` contributes two edge-ends at `v`.
    pub fn from_edges(n: usize, d: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut fill = vec![0usize; n];
        let mut ends = vec![0 as Vertex; n * d];
        let mut push = |v: Vertex, u: Vertex, fill: &mut Vec<usize>| -> Result<()> {
            let vi = v as usize;
            if vi >= n {
                return Err(Error::VertexOutOfRange { vertex: vi, n });
            }
            if fill[vi] == d {
                return Err(invalid("vertex degree exceeds d"));
            }
            ends[vi * d + fill[vi]] = u;
            fill[vi] += 1;
            Ok(())
        };
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::VertexOutOfRange { vertex: u.max(v) as usize, n });
            }
            push(u, v, &mut fill)?;
            push(v, u, &mut fill)?;
        }
        if fill.iter().any(|&f| f != d) {
            return Err(invalid("graph is not d-regular"));
        }
        Self::from_edge_ends(n, d, ends)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// No loops and no parallel edges.
    pub fn is_simple(&self) -> bool {
        self.simple
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.d / 2
    }

    /// Far ends of the `d` edge-ends of `v`.
    #[inline]
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let v = v as usize;
        &self.ends[v * self.d..(v + 1) * self.d]
    }

    pub fn edge_ends(&self) -> &[Vertex] {
        &self.ends
    }

    /// Each undirected edge once as `(u, v)` with `u <= v`, parallel edges
    /// repeated, in order of the smaller endpoint.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for v in 0..self.n as Vertex {
            let mut loop_ends = 0usize;
            for &u in self.neighbors(v) {
                if u > v {
                    out.push((v, u));
                } else if u == v {
                    loop_ends += 1;
                    if loop_ends.is_multiple_of(2) {
                        out.push((v, v));
                    }
                }
            }
        }
        out
    }

    /// Number of edges with both endpoints in `s`. A loop counts once and
    /// parallel edges count with multiplicity.
    pub fn edges_within(&self, s: &VertexSet) -> Result<usize> {
        self.check_universe(s)?;
        let ends: usize = s
            .iter()
            .map(|v| self.neighbors(v).iter().filter(|&&u| s.contains(u)).count())
            .sum();
        Ok(ends / 2)
    }

    /// Number of edges joining `s` to `t`, with multiplicity. The sets must be
    /// disjoint.
    pub fn edges_between(&self, s: &VertexSet, t: &VertexSet) -> Result<usize> {
        self.check_universe(s)?;
        self.check_universe(t)?;
        if let Some(v) = s.iter().find(|&v| t.contains(v)) {
            return Err(Error::OverlappingSets(v as usize));
        }
        let (small, large) = if s.len() <= t.len() { (s, t) } else { (t, s) };
        Ok(small
            .iter()
            .map(|v| self.neighbors(v).iter().filter(|&&u| large.contains(u)).count())
            .sum())
    }

    /// Number of neighbors of `v` inside `s`, counting edge-ends.
    pub fn degree_into(&self, v: Vertex, s: &VertexSet) -> usize {
        self.neighbors(v).iter().filter(|&&u| s.contains(u)).count()
    }

    fn check_universe(&self, s: &VertexSet) -> Result<()> {
        if s.universe() != self.n {
            return Err(invalid("vertex set was built for a different vertex count"));
        }
        Ok(())
    }

    /// Distance layers from `root`.
    pub fn bfs_layers(&self, root: Vertex) -> Result<BfsLayers> {
        if root as usize >= self.n {
            return Err(Error::VertexOutOfRange { vertex: root as usize, n: self.n });
        }
        let mut depth = vec![u32::MAX; self.n];
        depth[root as usize] = 0;
        let mut sizes = vec![1usize];
        let mut frontier = vec![root];
        let mut next = Vec::new();
        let mut level = 0u32;
        while !frontier.is_empty() {
            level += 1;
            for &v in &frontier {
                for &u in self.neighbors(v) {
                    if depth[u as usize] == u32::MAX {
                        depth[u as usize] = level;
                        next.push(u);
                    }
                }
            }
            if !next.is_empty() {
                sizes.push(next.len());
            }
            core::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        Ok(BfsLayers { sizes, depth })
    }

    /// True if every vertex is reachable from vertex 0.
    pub fn is_connected(&self) -> bool {
        self.bfs_layers(0)
            .map(|l| l.reached() == self.n)
            .unwrap_or(false)
    }
}

/// Layer sizes `|D_0|, |D_1|, ...` of a breadth-first search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsLayers {
    sizes: Vec<usize>,
    depth: Vec<u32>,
}

impl BfsLayers {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Distance from the root, `None` if unreachable.
    pub fn depth(&self, v: Vertex) -> Option<u32> {
        match self.depth[v as usize] {
            u32::MAX => None,
            k => Some(k),
        }
    }

    pub fn reached(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// The ball of radius `depth` induces a tree: it spans exactly
    /// `|ball| - 1` edges.
    pub fn is_tree_up_to(&self, g: &Graph, depth: u32) -> bool {
        let ball = VertexSet::from_mask(
            self.depth.iter().map(|&k| k <= depth).collect(),
        );
        let size: usize = self.sizes.iter().take(depth as usize + 1).sum();
        g.edges_within(&ball).map(|e| e + 1 == size).unwrap_or(false)
    }
}

/// Set of vertices of a graph on `universe` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    members: Vec<Vertex>,
    mask: Vec<bool>,
}

impl VertexSet {
    /// Rejects ids `>= universe` and duplicates.
    pub fn new(universe: usize, members: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut mask = vec![false; universe];
        let mut list = Vec::new();
        for v in members {
            let vi = v as usize;
            if vi >= universe {
                return Err(Error::VertexOutOfRange { vertex: vi, n: universe });
            }
            if mask[vi] {
                return Err(Error::DuplicateVertex(vi));
            }
            mask[vi] = true;
            list.push(v);
        }
        list.sort_unstable();
        Ok(Self { members: list, mask })
    }

    pub fn empty(universe: usize) -> Self {
        Self { members: Vec::new(), mask: vec![false; universe] }
    }

    pub fn full(universe: usize) -> Self {
        Self::from_mask(vec![true; universe])
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(v, _)| v as Vertex)
            .collect();
        Self { members, mask }
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.mask.iter().map(|m| !m).collect())
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        self.mask.get(v as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.members.iter().copied()
    }

    pub fn members(&self) -> &[Vertex] {
        &self.members
    }
}

/// Small named graphs used as fixtures and controls.
pub mod fixtures {
    use super::*;

    /// K_n, (n-1)-regular.
    pub fn complete(n: usize) -> Graph {
        let mut ends = Vec::with_capacity(n * (n - 1));
        for v in 0..n as Vertex {
            ends.extend((0..n as Vertex).filter(|&u| u != v));
        }
        Graph::from_edge_ends(n, n - 1, ends).expect("complete graph is regular")
    }

    /// Petersen graph: outer cycle 0..5, spokes i -- i+5, inner pentagram.
    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, 3, &edges).expect("Petersen graph is 3-regular")
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n as Vertex).map(|i| (i, (i + 1) % n as Vertex)).collect();
        Graph::from_edges(n, 2, &edges).expect("cycle is 2-regular")
    }

    /// K_{k,k} with parts `0..k` and `k..2k`.
    pub fn complete_bipartite(k: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..k as Vertex {
            for b in 0..k as Vertex {
                edges.push((a, k as Vertex + b));
            }
        }
        Graph::from_edges(2 * k, k, &edges).expect("K_{k,k} is regular")
    }

    /// Prism over the m-cycle (3-regular on 2m vertices).
    pub fn prism(m: usize) -> Graph {
        let m = m as Vertex;
        let mut edges = Vec::new();
        for i in 0..m {
            edges.push((i, (i + 1) % m));
            edges.push((m + i, m + (i + 1) % m));
            edges.push((i, m + i));
        }
        Graph::from_edges(2 * m as usize, 3, &edges).expect("prism is 3-regular")
    }

    /// The k-dimensional hypercube.
    pub fn hypercube(k: u32) -> Graph {
        let n = 1usize << k;
        let mut ends = Vec::with_capacity(n * k as usize);
        for v in 0..n as Vertex {
            ends.extend((0..k).map(|b| v ^ (1 << b)));
        }
        Graph::from_edge_ends(n, k as usize, ends).expect("hypercube is regular")
    }

    /// Vertex-disjoint union; all parts must share the degree.
    pub fn disjoint_union(parts: &[Graph]) -> Result<Graph> {
        let d = parts.first().map(|g| g.d()).ok_or_else(|| invalid("no parts"))?;
        if parts.iter().any(|g| g.d() != d) {
            return Err(invalid("parts have different degrees"));
        }
        let mut ends = Vec::new();
        let mut offset = 0 as Vertex;
        for g in parts {
            ends.extend(g.edge_ends().iter().map(|&u| u + offset));
            offset += g.n() as Vertex;
        }
        Graph::from_edge_ends(offset as usize, d, ends)
    }
}
