//! Set partitions of boundary vertices.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("vertex {0} appears in more than one block")]
    Overlap(usize),
    #[error("empty block in a partition with {0} blocks")]
    EmptyBlock(usize),
    #[error("vertex {0} missing from relabel map")]
    Unmapped(usize),
    #[error("relabel map sends two vertices to {0}")]
    NotInjective(usize),
}

/// A partition of a set of vertices into disjoint blocks.
///
/// Canonical form: vertices sorted within blocks, blocks sorted by their
/// minimum. A single block imposes nothing beyond connectivity (its forests are
/// the spanning trees), so every one-block partition is stored as the
/// *connected* partition: one block listing no vertices. Equality of canonical
/// forms is equality of the forest polynomials they stand for.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexPartition {
    blocks: Vec<Vec<usize>>,
}

impl VertexPartition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        if blocks.len() == 1 {
            return Ok(Self::connected());
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &mut blocks {
            if b.is_empty() {
                return Err(PartitionError::EmptyBlock(0));
            }
            b.sort_unstable();
            for w in b.windows(2) {
                if w[0] == w[1] {
                    return Err(PartitionError::Overlap(w[0]));
                }
            }
            for &v in b.iter() {
                if !seen.insert(v) {
                    return Err(PartitionError::Overlap(v));
                }
            }
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(VertexPartition { blocks })
    }

    /// The one-block partition (spanning trees).
    pub fn connected() -> Self {
        VertexPartition { blocks: vec![Vec::new()] }
    }

    /// The partition with no blocks. Its forest polynomial vanishes on any
    /// nonempty graph.
    pub fn empty() -> Self {
        VertexPartition { blocks: Vec::new() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_connected(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Sorted list of the vertices mentioned by the partition.
    pub fn ground(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.blocks.iter().flatten().copied().collect();
        g.sort_unstable();
        g
    }

    pub fn block_of(&self, v: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&v))
    }

    pub fn contains(&self, v: usize) -> bool {
        self.block_of(v).is_some()
    }

    /// Transport along a vertex map; every ground vertex must be mapped and
    /// no two may collide.
    pub fn relabel<F>(&self, map: F) -> Result<Self, PartitionError>
    where
        F: Fn(usize) -> Option<usize>,
    {
        if self.is_connected() {
            return Ok(self.clone());
        }
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.blocks {
            let mut nb = Vec::with_capacity(b.len());
            for &v in b {
                let w = map(v).ok_or(PartitionError::Unmapped(v))?;
                if !seen.insert(w) {
                    return Err(PartitionError::NotInjective(w));
                }
                nb.push(w);
            }
            out.push(nb);
        }
        Self::new(out)
    }
}

impl fmt::Debug for VertexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for VertexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_connected() {
            return write!(f, "{{*}}");
        }
        for b in &self.blocks {
            write!(f, "{{")?;
            for (i, v) in b.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// All set partitions of `elems`, as raw block lists (one-block partitions
/// are not collapsed here).
pub fn set_partitions(elems: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut cur: Vec<Vec<usize>> = Vec::new();
    fn rec(i: usize, elems: &[usize], cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == elems.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(elems[i]);
            rec(i + 1, elems, cur, out);
            cur[b].pop();
        }
        cur.push(vec![elems[i]]);
        rec(i + 1, elems, cur, out);
        cur.pop();
    }
    rec(0, elems, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell: Vec<usize> = (0..7).map(|k| set_partitions(&(0..k).collect::<Vec<_>>()).len()).collect();
        assert_eq!(bell, vec![1, 1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn canonical_form() {
        let a = VertexPartition::new(vec![vec![5, 3], vec![1]]).unwrap();
        let b = VertexPartition::new(vec![vec![1], vec![3, 5]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.blocks(), &[vec![1], vec![3, 5]]);
        assert_eq!(VertexPartition::new(vec![vec![2, 0]]).unwrap(), VertexPartition::connected());
        assert!(VertexPartition::new(vec![vec![1], vec![1, 2]]).is_err());
    }

    #[test]
    fn relabel_round_trip() {
        let a = VertexPartition::new(vec![vec![0, 4], vec![2]]).unwrap();
        let b = a.relabel(|v| Some(10 - v)).unwrap();
        assert_eq!(b.blocks(), &[vec![6, 10], vec![8]]);
        assert_eq!(b.relabel(|v| Some(10 - v)).unwrap(), a);
        assert_eq!(a.relabel(|v| (v != 2).then_some(v)), Err(PartitionError::Unmapped(2)));
        assert!(matches!(a.relabel(|_| Some(0)), Err(PartitionError::NotInjective(0))));
    }
}
