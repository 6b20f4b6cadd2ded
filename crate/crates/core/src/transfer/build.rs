use std::collections::{BTreeSet, HashMap};

use fnv::FnvHashMap;
use rayon::prelude::*;

use super::family::{Family, BOUNDARY};
use super::{check_prime, ProductState, TransferError, TransferSystem};
use crate::field::Fp;
use crate::forest::{assign_edges, ForestTerm};
use crate::graph::Graph;
use crate::partition::VertexPartition;

/// Chain used to derive the local rules; long enough that the six
/// boundary vertices and the new vertex are all distinct.
const RULE_CHAIN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorklistOrder {
    /// Process states in discovery order.
    #[default]
    Fifo,
    /// Process the most recently discovered batch first. The resulting
    /// system is identical; this exists to check exactly that.
    Lifo,
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub max_states: usize,
    /// Rows computed in parallel per round.
    pub batch: usize,
    pub order: WorklistOrder,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { max_states: 20_000_000, batch: 4096, order: WorklistOrder::Fifo }
    }
}

/// What becomes of each boundary partition when the two edges at L0 are
/// reduced, for each choice of which of the two edges stay in the forest.
///
/// Partition ids are indices into a sorted list, so comparing ids compares
/// partitions.
#[derive(Debug, Clone)]
pub struct LocalRules {
    pub family: Family,
    pub p: u32,
    pub partitions: Vec<VertexPartition>,
    /// `outcomes[id][u]`: bit 0 of `u` set when the short edge is in the
    /// forest, bit 1 when the long edge is.
    pub outcomes: Vec<[Vec<(u16, u32)>; 4]>,
}

impl LocalRules {
    /// Close the seed partitions under the local rules.
    pub fn new(family: Family, p: u32) -> Result<Self, TransferError> {
        Self::closure(family, p, &[])
    }

    /// As `new`, also closing over `extra` partitions of the boundary
    /// labels.
    pub fn closure(family: Family, p: u32, extra: &[VertexPartition]) -> Result<Self, TransferError> {
        let fp = check_prime(p)?;
        let h = family.chain(RULE_CHAIN);
        let s = h.incident_edges(0);
        let short = s.iter().position(|&e| h.edge(e) == (0, family.short_jump())).expect("short edge at 0");
        let to_vertex = Family::boundary_vertices(RULE_CHAIN);
        let back = Family::boundary_vertices(RULE_CHAIN - 1);

        let mut found: BTreeSet<VertexPartition> = BTreeSet::new();
        let mut todo: Vec<VertexPartition> = Vec::new();
        for (factors, _) in family.seeds(fp) {
            for f in factors {
                if found.insert(f.clone()) {
                    todo.push(f);
                }
            }
        }
        for f in extra {
            if found.insert(f.clone()) {
                todo.push(f.clone());
            }
        }
        let mut raw: HashMap<VertexPartition, [Vec<(VertexPartition, u32)>; 4]> = HashMap::new();
        while let Some(part) = todo.pop() {
            let outs = local_outcomes(&h, &s, short, &part, &to_vertex, &back, p)?;
            for list in &outs {
                for (q, _) in list {
                    if found.insert(q.clone()) {
                        todo.push(q.clone());
                    }
                }
            }
            raw.insert(part, outs);
        }
        if found.len() > u16::MAX as usize {
            return Err(TransferError::TooManyPartitions(u16::MAX as usize));
        }
        let partitions: Vec<VertexPartition> = found.into_iter().collect();
        let id: HashMap<&VertexPartition, u16> = partitions.iter().enumerate().map(|(i, q)| (q, i as u16)).collect();
        let outcomes = partitions
            .iter()
            .map(|q| {
                let outs = &raw[q];
                std::array::from_fn(|u| outs[u].iter().map(|(r, c)| (id[r], *c)).collect())
            })
            .collect();
        Ok(LocalRules { family, p, partitions, outcomes })
    }

    pub fn id_of(&self, q: &VertexPartition) -> Option<u16> {
        self.partitions.binary_search(q).ok().map(|i| i as u16)
    }
}

fn local_outcomes(
    h: &Graph,
    s: &[usize],
    short: usize,
    part: &VertexPartition,
    to_vertex: &[usize; BOUNDARY],
    back: &[usize; BOUNDARY],
    p: u32,
) -> Result<[Vec<(VertexPartition, u32)>; 4], TransferError> {
    let on_chain = part.relabel(|l| to_vertex.get(l).copied()).map_err(crate::forest::ForestError::from)?;
    let term = ForestTerm { partition: on_chain, coeff: 1 };
    let mut out: [Vec<(VertexPartition, u32)>; 4] = Default::default();
    for (u, slot) in out.iter_mut().enumerate() {
        // Edges not in the forest are the ones whose variable this factor
        // supplies.
        let mut assigned = 0u64;
        for (k, &e) in s.iter().enumerate() {
            let in_forest = if k == short { u & 1 == 1 } else { u & 2 == 2 };
            if !in_forest {
                assigned |= 1 << e;
            }
        }
        let (_, sum) = assign_edges(h, &term, s, assigned, p)?;
        for t in sum.iter() {
            let q = t.partition.relabel(|v| back.iter().position(|&b| b == v)).map_err(crate::forest::ForestError::from)?;
            slot.push((q, t.coeff));
        }
        slot.sort();
    }
    Ok(out)
}

/// Reduce one state by a chain step. Returns every product generated with
/// the correct degree, including those whose coefficient cancels mod p;
/// the list is sorted by state.
pub fn chain_step(rules: &LocalRules, state: &[u16]) -> Vec<(ProductState, u32)> {
    let p = rules.p;
    let need = (p - 1) as u8;
    let fp = Fp::new(p).expect("rules hold a prime");
    let k = state.len();
    let mut dp: FnvHashMap<(u8, u8, Vec<u16>), u32> = FnvHashMap::default();
    dp.insert((0, 0, Vec::new()), 1);
    for (idx, &f) in state.iter().enumerate() {
        let left = (k - idx - 1) as u8;
        let mut next: FnvHashMap<(u8, u8, Vec<u16>), u32> = FnvHashMap::default();
        for ((c1, c2, ms), cf) in &dp {
            for (u, list) in rules.outcomes[f as usize].iter().enumerate() {
                let a1 = c1 + (u & 1) as u8;
                let a2 = c2 + (u >> 1) as u8;
                if a1 > need || a2 > need || a1 + left < need || a2 + left < need {
                    continue;
                }
                for &(q, c) in list {
                    let mut nm = ms.clone();
                    let at = nm.partition_point(|&x| x <= q);
                    nm.insert(at, q);
                    let e = next.entry((a1, a2, nm)).or_insert(0);
                    *e = fp.add(*e, fp.mul(*cf, c));
                }
            }
        }
        dp = next;
    }
    let mut row: Vec<(ProductState, u32)> = dp.into_iter().map(|((_, _, ms), c)| (ms.into_boxed_slice(), c)).collect();
    row.sort_unstable();
    row
}

pub(super) fn discover(family: Family, p: u32, cfg: &BuildConfig) -> Result<TransferSystem, TransferError> {
    let fp = check_prime(p)?;
    let rules = LocalRules::new(family, p)?;
    let mut order: Vec<ProductState> = Vec::new();
    let mut index: FnvHashMap<ProductState, u32> = FnvHashMap::default();
    let mut weights: Vec<(u32, u32)> = Vec::new();
    let intern = |st: ProductState, order: &mut Vec<ProductState>, index: &mut FnvHashMap<ProductState, u32>| -> u32 {
        *index.entry(st.clone()).or_insert_with(|| {
            order.push(st);
            (order.len() - 1) as u32
        })
    };
    for (factors, w) in family.seeds(fp) {
        let mut ids: Vec<u16> = factors.iter().map(|q| rules.id_of(q).expect("seed partitions are interned")).collect();
        ids.sort_unstable();
        let i = intern(ids.into_boxed_slice(), &mut order, &mut index);
        weights.push((i, w));
    }

    let mut rows: Vec<Option<Vec<(u32, u32)>>> = Vec::new();
    let mut pending: Vec<u32> = (0..order.len() as u32).collect();
    let mut processed = 0usize;
    while !pending.is_empty() {
        let take = cfg.batch.max(1).min(pending.len());
        let batch: Vec<u32> = match cfg.order {
            WorklistOrder::Fifo => pending.drain(..take).collect(),
            WorklistOrder::Lifo => pending.drain(pending.len() - take..).rev().collect(),
        };
        let results: Vec<Vec<(ProductState, u32)>> = batch.par_iter().map(|&i| chain_step(&rules, &order[i as usize])).collect();
        for (&i, result) in batch.iter().zip(results) {
            let mut row = Vec::with_capacity(result.len());
            for (st, c) in result {
                let before = order.len();
                let j = intern(st, &mut order, &mut index);
                if order.len() > before {
                    if order.len() > cfg.max_states {
                        return Err(TransferError::TooManyStates { limit: cfg.max_states, processed });
                    }
                    pending.push(j);
                }
                if c != 0 {
                    row.push((j, c));
                }
            }
            if rows.len() < order.len() {
                rows.resize(order.len(), None);
            }
            rows[i as usize] = Some(row);
            processed += 1;
        }
    }
    drop(index);

    // Canonical numbering: states in sorted order.
    let mut perm: Vec<u32> = (0..order.len() as u32).collect();
    perm.sort_unstable_by(|&a, &b| order[a as usize].cmp(&order[b as usize]));
    let mut rank = vec![0u32; order.len()];
    for (r, &old) in perm.iter().enumerate() {
        rank[old as usize] = r as u32;
    }
    let mut row_ptr = Vec::with_capacity(order.len() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0u64);
    for &old in &perm {
        let mut row: Vec<(u32, u8)> =
            rows[old as usize].take().expect("every state has a row").into_iter().map(|(j, c)| (rank[j as usize], c as u8)).collect();
        row.sort_unstable();
        for (j, c) in row {
            cols.push(j);
            vals.push(c);
        }
        row_ptr.push(cols.len() as u64);
    }
    let mut states: Vec<ProductState> = Vec::with_capacity(order.len());
    for &old in &perm {
        states.push(std::mem::take(&mut order[old as usize]));
    }
    let mut w: Vec<(u32, u8)> = weights.into_iter().filter(|&(_, c)| c != 0).map(|(i, c)| (rank[i as usize], c as u8)).collect();
    w.sort_unstable();
    Ok(TransferSystem { family, p, partitions: rules.partitions, states, row_ptr, cols, vals, initial: Vec::new(), weights: w })
}
