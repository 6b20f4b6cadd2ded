//! Oriented multigraphs, circulant constructors, and spanning forest enumeration.
//!
//! Edge index `e` is the canonical name of an edge everywhere downstream, so
//! every operation that removes edges reports how surviving indices move.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::VertexPartition;

/// Edge subsets as bitmasks over edge indices.
pub type EdgeMask = u64;

/// Enumeration routines store edge subsets in a `u64`.
pub const MAX_ENUM_EDGES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("circulant C_{n}({i},{j}) is not 4-regular: {reason}")]
    NotFourRegular { n: usize, i: usize, j: usize, reason: &'static str },
    #[error("vertex {v} out of range for a graph with {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("edge {e} out of range for a graph with {m} edges")]
    EdgeOutOfRange { e: usize, m: usize },
    #[error("cannot contract self-loop {0}")]
    ContractSelfLoop(usize),
    #[error("graph has {0} edges; enumeration supports at most 64")]
    TooManyEdges(usize),
    #[error("graph text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// A graph obtained from another by removing or merging things, with the
/// maps needed to transport edge indices and vertex partitions.
#[derive(Debug, Clone)]
pub struct Minor {
    pub graph: Graph,
    /// Old edge index to new edge index; `None` for removed edges.
    pub edge_map: Vec<Option<usize>>,
    /// Old vertex to new vertex; `None` for removed vertices.
    pub vertex_map: Vec<Option<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        for &(a, b) in &edges {
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { v, n });
                }
            }
        }
        Ok(Graph { n, edges })
    }

    /// C_n(i,j): vertices 0..n-1, edges (v, v+i) for v in order, then (v, v+j).
    pub fn circulant(n: usize, jumps: (usize, usize)) -> Result<Self, GraphError> {
        let (i, j) = jumps;
        let bad = |reason| Err(GraphError::NotFourRegular { n, i, j, reason });
        if n < 5 {
            return bad("n must be at least 5");
        }
        if !(1 <= i && i < j && j < n) {
            return bad("jumps must satisfy 1 <= i < j < n");
        }
        if i + j == n {
            return bad("i = n - j");
        }
        if 2 * i == n || 2 * j == n {
            return bad("a jump equals n/2");
        }
        let mut edges = Vec::with_capacity(2 * n);
        for s in [i, j] {
            for v in 0..n {
                edges.push((v, (v + s) % n));
            }
        }
        Ok(Graph { n, edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum()
    }

    pub fn incident_edges(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].0 == v || self.edges[e].1 == v).collect()
    }

    fn check_edge(&self, e: usize) -> Result<(), GraphError> {
        if e >= self.edges.len() {
            return Err(GraphError::EdgeOutOfRange { e, m: self.edges.len() });
        }
        Ok(())
    }

    /// Remove vertex `v` and its edges; survivors are relabeled densely in order.
    pub fn decomplete(&self, v: usize) -> Result<Minor, GraphError> {
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange { v, n: self.n });
        }
        let vertex_map: Vec<Option<usize>> =
            (0..self.n).map(|u| (u != v).then(|| if u < v { u } else { u - 1 })).collect();
        let mut edges = Vec::new();
        let mut edge_map = Vec::with_capacity(self.edges.len());
        for &(a, b) in &self.edges {
            if a == v || b == v {
                edge_map.push(None);
            } else {
                edge_map.push(Some(edges.len()));
                edges.push((vertex_map[a].unwrap(), vertex_map[b].unwrap()));
            }
        }
        Ok(Minor { graph: Graph { n: self.n - 1, edges }, edge_map, vertex_map })
    }

    /// Delete edges; vertices are kept with their labels.
    pub fn delete(&self, edges: &[usize]) -> Result<Minor, GraphError> {
        for &e in edges {
            self.check_edge(e)?;
        }
        let mut kept = Vec::new();
        let mut edge_map = Vec::with_capacity(self.edges.len());
        for (e, &ed) in self.edges.iter().enumerate() {
            if edges.contains(&e) {
                edge_map.push(None);
            } else {
                edge_map.push(Some(kept.len()));
                kept.push(ed);
            }
        }
        Ok(Minor {
            graph: Graph { n: self.n, edges: kept },
            edge_map,
            vertex_map: (0..self.n).map(Some).collect(),
        })
    }

    /// Contract edges. Each merged class is named by its minimum old label,
    /// then classes are relabeled densely in that order. Self-loops created
    /// along the way are kept.
    pub fn contract(&self, edges: &[usize]) -> Result<Minor, GraphError> {
        for &e in edges {
            self.check_edge(e)?;
        }
        let mut uf = UnionFind::new(self.n);
        for &e in edges {
            let (a, b) = self.edges[e];
            if uf.find(a) == uf.find(b) {
                return Err(GraphError::ContractSelfLoop(e));
            }
            uf.union(a, b);
        }
        let mut class_min = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = uf.find(v);
            class_min[r] = class_min[r].min(v);
        }
        let mut reps: Vec<usize> = (0..self.n).filter(|&v| class_min[uf.find(v)] == v).collect();
        reps.sort_unstable();
        let mut dense = vec![0; self.n];
        for (i, &r) in reps.iter().enumerate() {
            dense[r] = i;
        }
        let vertex_map: Vec<Option<usize>> =
            (0..self.n).map(|v| Some(dense[class_min[uf.find(v)]])).collect();
        let mut kept = Vec::new();
        let mut edge_map = Vec::with_capacity(self.edges.len());
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if edges.contains(&e) {
                edge_map.push(None);
            } else {
                edge_map.push(Some(kept.len()));
                kept.push((vertex_map[a].unwrap(), vertex_map[b].unwrap()));
            }
        }
        Ok(Minor { graph: Graph { n: reps.len(), edges: kept }, edge_map, vertex_map })
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.n);
        let mut comps = self.n;
        for &(a, b) in &self.edges {
            if uf.union(a, b) {
                comps -= 1;
            }
        }
        comps == 1
    }

    /// Signed incidence matrix (+1 at tail, -1 at head) without the row of
    /// `dropped`. Rows follow the remaining vertices in ascending order.
    pub fn reduced_incidence(&self, dropped: usize) -> Result<Vec<Vec<i64>>, GraphError> {
        if dropped >= self.n {
            return Err(GraphError::VertexOutOfRange { v: dropped, n: self.n });
        }
        let mut rows = Vec::with_capacity(self.n - 1);
        for v in (0..self.n).filter(|&v| v != dropped) {
            let row = self
                .edges
                .iter()
                .map(|&(a, b)| if a == b { 0 } else if a == v { 1 } else if b == v { -1 } else { 0 })
                .collect();
            rows.push(row);
        }
        Ok(rows)
    }

    /// All spanning trees as edge masks. Empty if the graph is disconnected.
    pub fn spanning_trees(&self) -> Result<Vec<EdgeMask>, GraphError> {
        self.forests_for_partition(&VertexPartition::connected())
    }

    /// All spanning forests whose trees biject with the blocks of `p`, each
    /// block inside its own tree.
    pub fn forests_for_partition(&self, p: &VertexPartition) -> Result<Vec<EdgeMask>, GraphError> {
        let mut out = Vec::new();
        self.for_each_forest(p, |f| out.push(f))?;
        Ok(out)
    }

    /// Visitor form of [`Graph::forests_for_partition`].
    pub fn for_each_forest<F: FnMut(EdgeMask)>(&self, p: &VertexPartition, mut visit: F) -> Result<(), GraphError> {
        if self.edges.len() > MAX_ENUM_EDGES {
            return Err(GraphError::TooManyEdges(self.edges.len()));
        }
        for &v in &p.ground() {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange { v, n: self.n });
            }
        }
        let target = p.num_blocks();
        if target == 0 {
            // Only the empty graph has a forest with no trees.
            if self.n == 0 {
                visit(0);
            }
            return Ok(());
        }
        if target > self.n.max(1) {
            return Ok(());
        }
        // tag[v] = block index + 1, or 0 for untagged.
        let mut tag = vec![0u32; self.n];
        if !p.is_connected() {
            for (i, b) in p.blocks().iter().enumerate() {
                for &v in b {
                    tag[v] = i as u32 + 1;
                }
            }
        }
        let mut search = ForestSearch {
            edges: &self.edges,
            target,
            need_tags: !p.is_connected(),
            parent: (0..self.n).collect(),
            tag,
            comps: self.n,
        };
        search.rec(0, 0, &mut visit);
        Ok(())
    }

    /// Parse the text format: a line "n m", then m lines "tail head".
    /// Blank lines and lines starting with '#' are ignored.
    pub fn parse_text(s: &str) -> Result<Self, GraphError> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line, msg: &str| GraphError::Parse { line, msg: msg.to_string() };
        let (hl, header) = lines.next().ok_or_else(|| err(0, "missing header"))?;
        let (n, m) = parse_pair(header).ok_or_else(|| err(hl, "expected \"n m\""))?;
        let mut edges = Vec::with_capacity(m.min(1 << 16));
        for _ in 0..m {
            let (li, l) = lines.next().ok_or_else(|| err(0, "fewer edge lines than declared"))?;
            let (a, b) = parse_pair(l).ok_or_else(|| err(li, "expected \"tail head\""))?;
            if a >= n || b >= n {
                return Err(err(li, "endpoint out of range"));
            }
            edges.push((a, b));
        }
        if let Some((li, _)) = lines.next() {
            return Err(err(li, "more edge lines than declared"));
        }
        Ok(Graph { n, edges })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "{a} {b}");
        }
        s
    }
}

fn parse_pair(l: &str) -> Option<(usize, usize)> {
    let mut it = l.split_whitespace();
    let a = it.next()?.parse().ok()?;
    let b = it.next()?.parse().ok()?;
    it.next().is_none().then_some((a, b))
}

struct ForestSearch<'a> {
    edges: &'a [(usize, usize)],
    target: usize,
    need_tags: bool,
    parent: Vec<usize>,
    tag: Vec<u32>,
    comps: usize,
}

impl ForestSearch<'_> {
    fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn rec<F: FnMut(EdgeMask)>(&mut self, i: usize, chosen: EdgeMask, visit: &mut F) {
        // Each remaining edge can remove at most one component.
        if self.comps < self.target || self.comps - self.target > self.edges.len() - i {
            return;
        }
        if i == self.edges.len() {
            if self.comps == self.target && (!self.need_tags || self.all_tagged()) {
                visit(chosen);
            }
            return;
        }
        let (a, b) = self.edges[i];
        let (ra, rb) = (self.find(a), self.find(b));
        if self.comps > self.target && ra != rb {
            let (ta, tb) = (self.tag[ra], self.tag[rb]);
            if ta == 0 || tb == 0 || ta == tb {
                // Union without path compression so it can be undone.
                self.parent[rb] = ra;
                self.tag[ra] = ta.max(tb);
                self.comps -= 1;
                self.rec(i + 1, chosen | (1 << i), visit);
                self.comps += 1;
                self.tag[ra] = ta;
                self.parent[rb] = rb;
            }
        }
        self.rec(i + 1, chosen, visit);
    }

    fn all_tagged(&self) -> bool {
        (0..self.parent.len()).all(|v| self.parent[v] != v || self.tag[v] != 0)
    }
}

/// Plain union-find with path halving.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns false if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[rb.max(ra)] = ra.min(rb);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                e.push((a, b));
            }
        }
        Graph::new(n, e).unwrap()
    }

    #[test]
    fn circulant_examples() {
        let k5 = Graph::circulant(5, (1, 2)).unwrap();
        let mut pairs: Vec<(usize, usize)> = k5.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        assert_eq!(pairs.len(), 10);
        let g = Graph::circulant(9, (1, 3)).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (9, 18));
        assert!((0..9).all(|v| g.degree(v) == 4));
        assert_eq!(g.edge(9), (0, 3));
        assert!(Graph::circulant(6, (1, 3)).is_err());
        assert!(Graph::circulant(7, (3, 4)).is_err());
    }

    #[test]
    fn decompletion_counts() {
        let g = Graph::circulant(9, (1, 3)).unwrap().decomplete(0).unwrap().graph;
        assert_eq!((g.num_vertices(), g.num_edges()), (8, 14));
        let k4 = Graph::circulant(5, (1, 2)).unwrap().decomplete(2).unwrap().graph;
        assert_eq!(k4.spanning_trees().unwrap().len(), 16);
    }

    #[test]
    fn tree_enumeration_small() {
        let mut t = triangle().spanning_trees().unwrap();
        t.sort_unstable();
        assert_eq!(t, vec![0b011, 0b101, 0b110]);
        assert_eq!(t.len(), 3);
        assert_eq!(complete(4).spanning_trees().unwrap().len(), 16);
        let path = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.spanning_trees().unwrap(), vec![0b11]);
        let split = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(split.spanning_trees().unwrap().is_empty());
    }

    #[test]
    fn forests_on_a_path() {
        let path = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let p = VertexPartition::new(vec![vec![0], vec![2]]).unwrap();
        let mut f = path.forests_for_partition(&p).unwrap();
        f.sort_unstable();
        assert_eq!(f, vec![0b01, 0b10]);
        let split = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let q = VertexPartition::new(vec![vec![0, 2], vec![1]]).unwrap();
        assert!(split.forests_for_partition(&q).unwrap().is_empty());
    }

    #[test]
    fn contraction_and_deletion() {
        let c = triangle().contract(&[0]).unwrap();
        assert_eq!(c.graph.num_vertices(), 2);
        assert_eq!(c.graph.edges(), &[(0, 1), (1, 0)]);
        assert_eq!(c.edge_map, vec![None, Some(0), Some(1)]);
        let path = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let pc = path.contract(&[0]).unwrap();
        assert_eq!(pc.vertex_map, vec![Some(0), Some(0), Some(1)]);
        let loopy = Graph::new(2, vec![(0, 1), (0, 1)]).unwrap().contract(&[0]).unwrap().graph;
        assert_eq!(loopy.edges(), &[(0, 0)]);
        assert!(loopy.contract(&[0]).is_err());
    }

    #[test]
    fn incidence() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(g.reduced_incidence(1).unwrap(), vec![vec![1]]);
        let t = triangle().reduced_incidence(2).unwrap();
        assert_eq!(t, vec![vec![1, 0, -1], vec![-1, 1, 0]]);
    }

    #[test]
    fn text_round_trip() {
        let g = Graph::circulant(7, (2, 3)).unwrap();
        assert_eq!(Graph::parse_text(&g.to_text()).unwrap(), g);
        assert!(Graph::parse_text("3 1\n0 5\n").is_err());
        assert!(Graph::parse_text("3 2\n0 1\n").is_err());
        assert!(Graph::parse_text("").is_err());
        assert_eq!(Graph::parse_text("# c\n2 1\n\n0 1\n").unwrap().num_edges(), 1);
    }
}
