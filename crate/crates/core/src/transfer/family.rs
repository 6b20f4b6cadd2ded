//! The two circulant families as chain graphs.
//!
//! Both C̃_n(1,3) and C̃_n(2,3) decomplete to a chain on vertices 0..m with
//! edges (v, v+s) and (v, v+3), where s is the short jump. The boundary of a
//! chain is its first three and last three vertices, labeled
//! L0 L1 L2 R0 R1 R2 = 0..6. One chain step removes the two edges at L0
//! (to L0+s and to the new vertex L0+3); the labels then shift down by one
//! on the left.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::field::Fp;
use crate::graph::Graph;
use crate::partition::VertexPartition;

pub const L0: usize = 0;
pub const L1: usize = 1;
pub const L2: usize = 2;
pub const R0: usize = 3;
pub const R1: usize = 4;
pub const R2: usize = 5;
pub const BOUNDARY: usize = 6;

/// Vertex count of the smallest chain the recurrence starts from.
pub const MINIMAL_CHAIN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    C13,
    C23,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::C13, Family::C23];

    pub fn jumps(self) -> (usize, usize) {
        match self {
            Family::C13 => (1, 3),
            Family::C23 => (2, 3),
        }
    }

    /// Short jump of the chain, i.e. the jump that is not 3.
    pub fn short_jump(self) -> usize {
        self.jumps().0
    }

    /// n of the circulant whose decompletion is the chain on m vertices.
    pub fn n_of_chain(self, m: usize) -> usize {
        match self {
            Family::C13 => m + 3,
            Family::C23 => m + 1,
        }
    }

    /// First n with a proper member of the family; the minimal chain sits
    /// one step earlier.
    pub fn first_n(self) -> usize {
        self.n_of_chain(MINIMAL_CHAIN + 1)
    }

    /// Chain graph on `m` vertices.
    pub fn chain(self, m: usize) -> Graph {
        let mut edges = Vec::new();
        for s in [self.short_jump(), 3] {
            for v in 0..m.saturating_sub(s) {
                edges.push((v, v + s));
            }
        }
        Graph::new(m, edges).expect("chain edges are in range")
    }

    /// Chain vertex carrying each boundary label. Labels may share a
    /// vertex on short chains.
    pub fn boundary_vertices(m: usize) -> [usize; BOUNDARY] {
        [0, 1, 2, m - 3, m - 2, m - 1]
    }

    pub fn tag(self) -> u8 {
        match self {
            Family::C13 => 13,
            Family::C23 => 23,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.tag() == tag)
    }

    /// Seed products with their weights in the output functional. Each
    /// product has 2p-2 factors over boundary labels.
    pub fn seeds(self, fp: Fp) -> Vec<(Vec<VertexPartition>, u32)> {
        let p = fp.p() as usize;
        let part = |b: Vec<Vec<usize>>| VertexPartition::new(b).expect("seed partitions are valid");
        match self {
            Family::C13 => {
                let a = part(vec![vec![L0], vec![L2, R0], vec![R2]]);
                let mut f = vec![a; p - 1];
                f.extend(std::iter::repeat_n(VertexPartition::connected(), p - 1));
                vec![(f, 1)]
            }
            Family::C23 => {
                let a = part(vec![vec![L1, R1], vec![R2], vec![L0]]);
                let b = part(vec![vec![R2, L0], vec![R1, L1]]);
                let c = part(vec![vec![R2, R1], vec![L0, L1]]);
                (0..p)
                    .map(|k| {
                        let mut f = vec![a.clone(); p - 1];
                        f.extend(std::iter::repeat_n(b.clone(), p - 1 - k));
                        f.extend(std::iter::repeat_n(c.clone(), k));
                        let w = fp.binomial(p as u32 - 1, k as u32);
                        (f, if k % 2 == 1 { fp.neg(w) } else { w })
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::C13 => "c13",
            Family::C23 => "c23",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c13" | "c(1,3)" => Ok(Family::C13),
            "c23" | "c(2,3)" => Ok(Family::C23),
            other => Err(format!("unknown family {other:?} (expected c13 or c23)")),
        }
    }
}
