//! Spanning forest polynomials as symbolic partitions: Dodgson polynomials
//! expanded into forest polynomials, and the reduction that assigns a set of
//! edges and rewrites a forest polynomial on the smaller graph.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::field::Fp;
use crate::graph::{EdgeMask, Graph, GraphError, Minor, UnionFind};
use crate::partition::{set_partitions, PartitionError, VertexPartition};
use crate::poly::{dodgson_coefficient, MultilinearPoly, OracleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForestError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("Dodgson index sets must have equal size, got |I| = {0} and |J| = {1}")]
    UnequalIndexSets(usize, usize),
    #[error("sign calibration for {partition} found coefficient {coefficient}, expected +1 or -1")]
    Calibration { partition: String, coefficient: i64 },
}

/// A prime used only to read off ±1 signs during calibration.
const CALIBRATION_PRIME: u32 = 2_147_483_647;

/// One forest polynomial with a coefficient in F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestTerm {
    pub partition: VertexPartition,
    pub coeff: u32,
}

/// A linear combination of forest polynomials on one graph; each partition
/// appears at most once and no coefficient is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestSum {
    p: u32,
    terms: BTreeMap<VertexPartition, u32>,
}

impl ForestSum {
    pub fn new(p: u32) -> Self {
        ForestSum { p, terms: BTreeMap::new() }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn add(&mut self, partition: VertexPartition, coeff: u32) {
        let fp = Fp::new(self.p).expect("prime modulus");
        let c = self.terms.entry(partition.clone()).or_insert(0);
        *c = fp.add(*c, coeff % self.p);
        if *c == 0 {
            self.terms.remove(&partition);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, partition: &VertexPartition) -> u32 {
        self.terms.get(partition).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ForestTerm> + '_ {
        self.terms.iter().map(|(partition, &coeff)| ForestTerm { partition: partition.clone(), coeff })
    }

    /// The polynomial Σ c_P Φ^P_g, each Φ^P_g a sum over forests of the
    /// product of the edges outside the forest. Variables are g's edges.
    pub fn expand(&self, g: &Graph) -> Result<MultilinearPoly, ForestError> {
        let all = if g.num_edges() == 64 { u64::MAX } else { (1u64 << g.num_edges()) - 1 };
        let mut terms = Vec::new();
        for (part, &c) in &self.terms {
            g.for_each_forest(part, |f| terms.push((all & !f, c as i64)))?;
        }
        Ok(MultilinearPoly::from_terms(self.p, all, terms))
    }
}

fn mask_of(s: &[usize]) -> EdgeMask {
    s.iter().fold(0, |acc, &e| acc | 1 << e)
}

/// True if contracting `edges` (given by endpoints) joins the blocks of
/// `blocks` into exactly one tree, i.e. the block graph is a spanning tree.
fn blocks_form_tree(blocks: &[Vec<usize>], edges: &[(usize, usize)]) -> bool {
    if edges.len() + 1 != blocks.len() {
        return false;
    }
    let block_of = |v: usize| blocks.iter().position(|b| b.contains(&v));
    let mut uf = UnionFind::new(blocks.len());
    for &(a, b) in edges {
        match (block_of(a), block_of(b)) {
            (Some(x), Some(y)) if uf.union(x, y) => {}
            _ => return false,
        }
    }
    true
}

/// Expand Ψ^{I,J}_{g,K} as a signed sum of forest polynomials on
/// g ∖ (I ∪ J ∪ K).
///
/// A partition P of the endpoints of (I ∪ J ∪ K) ∖ (I ∩ J) is kept when its
/// forests become spanning trees both after contracting (J ∪ K) ∖ I and after
/// contracting (I ∪ K) ∖ J. Each sign is read off by comparing one monomial
/// of Φ^P with the determinant. Returns the deletion minor (vertex labels
/// unchanged) and the sum.
pub fn dodgson_to_forests(
    g: &Graph,
    i_set: &[usize],
    j_set: &[usize],
    k_set: &[usize],
    p: u32,
) -> Result<(Minor, ForestSum), ForestError> {
    Fp::new(p).map_err(|_| OracleError::NotPrime(p))?;
    if i_set.len() != j_set.len() {
        return Err(ForestError::UnequalIndexSets(i_set.len(), j_set.len()));
    }
    let (im, jm, km) = (mask_of(i_set), mask_of(j_set), mask_of(k_set));
    let removed: Vec<usize> = (0..g.num_edges()).filter(|&e| (im | jm | km) >> e & 1 == 1).collect();
    let minor = g.delete(&removed)?;
    let mut ends: Vec<usize> = removed
        .iter()
        .filter(|&&e| !(im & jm) >> e & 1 == 1)
        .flat_map(|&e| [g.edge(e).0, g.edge(e).1])
        .collect();
    ends.sort_unstable();
    ends.dedup();
    let endpoints_of = |mask: EdgeMask| -> Vec<(usize, usize)> {
        removed.iter().filter(|&&e| mask >> e & 1 == 1).map(|&e| g.edge(e)).collect()
    };
    let contract_a = endpoints_of((jm | km) & !im);
    let contract_b = endpoints_of((im | km) & !jm);
    let back: Vec<usize> = (0..g.num_edges()).filter(|e| minor.edge_map[*e].is_some()).collect();
    let mut sum = ForestSum::new(p);
    // With no endpoints the only candidate is the connected partition.
    let candidates = if ends.is_empty() { vec![vec![Vec::new()]] } else { set_partitions(&ends) };
    for blocks in candidates {
        if !blocks_form_tree(&blocks, &contract_a) || !blocks_form_tree(&blocks, &contract_b) {
            continue;
        }
        let part = VertexPartition::new(blocks).unwrap_or_else(|_| VertexPartition::connected());
        let mut forest = None;
        minor.graph.for_each_forest(&part, |f| {
            if forest.is_none() {
                forest = Some(f);
            }
        })?;
        let Some(f) = forest else { continue };
        let mut mono = 0u64;
        for (new_e, &old_e) in back.iter().enumerate() {
            if f >> new_e & 1 == 0 {
                mono |= 1 << old_e;
            }
        }
        let c = dodgson_coefficient(g, i_set, j_set, k_set, mono, CALIBRATION_PRIME)?;
        let sign = if c == 1 {
            1
        } else if c == CALIBRATION_PRIME - 1 {
            -1
        } else {
            return Err(ForestError::Calibration { partition: part.to_string(), coefficient: c as i64 });
        };
        sum.add(part, Fp::new(p).expect("prime").from_i64(sign));
    }
    Ok((minor, sum))
}

/// Transport a partition along a vertex relabeling.
pub fn canonicalize<F>(partition: &VertexPartition, map: F) -> Result<VertexPartition, ForestError>
where
    F: Fn(usize) -> Option<usize>,
{
    Ok(partition.relabel(map)?)
}

/// Raw partition: a list of blocks, where a single empty block is the
/// connected partition.
type Raw = Vec<Vec<usize>>;

fn subsets(items: &[usize]) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> + '_ {
    (0..1usize << items.len()).map(move |m| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, &v) in items.iter().enumerate() {
            if m >> i & 1 == 1 {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        (a, b)
    })
}

/// Forests that use edge (x, y): the tree through the edge splits into an
/// x-side and a y-side, and its block is shared between them.
fn split_on_edge(raw: &Raw, x: usize, y: usize, out: &mut Vec<Raw>) {
    let bx = raw.iter().position(|b| b.contains(&x));
    let by = raw.iter().position(|b| b.contains(&y));
    let mut emit = |bi: usize| {
        let rest: Vec<usize> = raw[bi].iter().copied().filter(|&v| v != x && v != y).collect();
        for (a, b) in subsets(&rest) {
            let mut next: Raw = raw.iter().enumerate().filter(|&(i, _)| i != bi).map(|(_, b)| b.clone()).collect();
            next.push([vec![x], a].concat());
            next.push([vec![y], b].concat());
            out.push(next);
        }
    };
    match (bx, by) {
        (Some(i), Some(j)) if i != j => {}
        (Some(i), _) | (None, Some(i)) => emit(i),
        (None, None) => (0..raw.len()).for_each(emit),
    }
}

fn normalize(raw: Raw) -> Option<VertexPartition> {
    match raw.len() {
        0 => None,
        1 => Some(VertexPartition::connected()),
        _ => Some(VertexPartition::new(raw).expect("disjoint nonempty blocks")),
    }
}

/// Merge groups of terms that differ only in which block a vertex `v` joined
/// when every block occurs with the same coefficient: Σ_b Φ^{Q + v∈b} = Φ^Q.
fn compact(terms: BTreeMap<VertexPartition, u32>, v: usize) -> BTreeMap<VertexPartition, u32> {
    let mut groups: BTreeMap<VertexPartition, Vec<(usize, u32)>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (part, c) in &terms {
        let Some(bi) = part.block_of(v) else { continue };
        if part.blocks()[bi].len() == 1 {
            continue;
        }
        let key_raw: Raw = part.blocks().iter().map(|b| b.iter().copied().filter(|&w| w != v).collect()).collect();
        let key = VertexPartition::new(key_raw.clone()).expect("blocks stay nonempty");
        let kb = key.block_of(key_raw[bi][0]).expect("block survives");
        groups.entry(key).or_default().push((kb, *c));
    }
    let mut absorbed = std::collections::BTreeSet::new();
    for (key, members) in &groups {
        let c = members[0].1;
        let complete = members.len() == key.num_blocks() && members.iter().all(|&(_, d)| d == c);
        if complete {
            for b in 0..key.num_blocks() {
                let mut raw: Raw = key.blocks().to_vec();
                raw[b].push(v);
                absorbed.insert(VertexPartition::new(raw).expect("valid"));
            }
            out.insert(key.clone(), c);
        }
    }
    for (part, c) in terms {
        if !absorbed.contains(&part) {
            out.insert(part, c);
        }
    }
    out
}

/// Assign the edges of `s` in a forest polynomial on `h`.
///
/// Edges in `assigned` are taken out of the forest (their variable is drawn
/// from this factor); the other edges of `s` must lie in the forest. The
/// result is a sum of forest polynomials on h ∖ s with the vertices isolated
/// by the removal dropped; the returned minor records the relabeling, and
/// the sum is expressed in the minor's labels.
///
/// Partitions only mention old ground vertices and endpoints of `s`. A new
/// endpoint is kept only where it separates trees.
pub fn assign_edges(
    h: &Graph,
    term: &ForestTerm,
    s: &[usize],
    assigned: EdgeMask,
    p: u32,
) -> Result<(Minor, ForestSum), ForestError> {
    let fp = Fp::new(p).map_err(|_| OracleError::NotPrime(p))?;
    let mut edges: Vec<usize> = s.to_vec();
    edges.sort_unstable();
    edges.dedup();
    let deleted = h.delete(&edges)?;
    // Vertices isolated by the removal leave the graph.
    let isolated: Vec<usize> = (0..h.num_vertices())
        .filter(|&v| h.degree(v) > 0 && deleted.graph.degree(v) == 0)
        .collect();
    let mut vertex_map = vec![None; h.num_vertices()];
    let mut next = 0;
    for (v, slot) in vertex_map.iter_mut().enumerate() {
        if !isolated.contains(&v) {
            *slot = Some(next);
            next += 1;
        }
    }
    let reduced = Graph::new(
        next,
        deleted.graph.edges().iter().map(|&(a, b)| (vertex_map[a].unwrap(), vertex_map[b].unwrap())).collect(),
    )?;
    let minor = Minor { graph: reduced, edge_map: deleted.edge_map, vertex_map };
    let mut sum = ForestSum::new(p);
    let coeff = term.coeff % p;
    if coeff == 0 {
        return Ok((minor, sum));
    }

    let ground = term.partition.ground();
    let mut work: Vec<Raw> = vec![term.partition.blocks().to_vec()];
    for &e in &edges {
        if assigned >> e & 1 == 1 {
            continue;
        }
        let (x, y) = h.edge(e);
        if x == y {
            return Ok((minor, sum));
        }
        let mut out = Vec::new();
        for raw in &work {
            split_on_edge(raw, x, y, &mut out);
        }
        work = out;
    }
    let mut terms: BTreeMap<VertexPartition, u32> = BTreeMap::new();
    'outer: for mut raw in work {
        for &z in &isolated {
            match raw.iter().position(|b| b.contains(&z)) {
                Some(i) if raw[i].len() == 1 => {
                    raw.remove(i);
                }
                _ => continue 'outer,
            }
        }
        let part = if raw.is_empty() && minor.graph.num_vertices() == 0 { Some(VertexPartition::empty()) } else { normalize(raw) };
        if let Some(part) = part {
            let c = terms.entry(part).or_insert(0);
            *c = fp.add(*c, coeff);
        }
    }
    terms.retain(|_, c| *c != 0);
    let mut fresh: Vec<usize> = edges
        .iter()
        .flat_map(|&e| [h.edge(e).0, h.edge(e).1])
        .filter(|v| !ground.contains(v) && !isolated.contains(v))
        .collect();
    fresh.sort_unstable();
    fresh.dedup();
    for &v in &fresh {
        terms = compact(terms, v);
    }
    let comps = components(&minor.graph);
    for (part, c) in terms {
        let moved = canonicalize(&part, |v| minor.vertex_map[v])?;
        if feasible(&moved, &comps) {
            sum.add(moved, c);
        }
    }
    Ok((minor, sum))
}

fn components(g: &Graph) -> Vec<usize> {
    let mut uf = UnionFind::new(g.num_vertices());
    for &(a, b) in g.edges() {
        uf.union(a, b);
    }
    (0..g.num_vertices()).map(|v| uf.find(v)).collect()
}

/// Necessary connectivity conditions for a nonzero forest polynomial: each
/// block inside one component and each component holding a block.
fn feasible(part: &VertexPartition, comps: &[usize]) -> bool {
    let mut roots: Vec<usize> = comps.to_vec();
    roots.sort_unstable();
    roots.dedup();
    if part.is_connected() {
        return roots.len() <= 1;
    }
    let mut hit = std::collections::BTreeSet::new();
    for b in part.blocks() {
        let c = comps[b[0]];
        if b.iter().any(|&v| comps[v] != c) {
            return false;
        }
        hit.insert(c);
    }
    hit.len() == roots.len()
}
