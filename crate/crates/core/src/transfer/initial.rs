use rayon::prelude::*;

use super::family::{Family, MINIMAL_CHAIN};
use super::{check_prime, ProductState, TransferError};
use crate::graph::{EdgeMask, Graph, UnionFind};
use crate::partition::VertexPartition;

/// Forests of `g` as (edge mask, component root per vertex).
fn forests(g: &Graph) -> Vec<(EdgeMask, Vec<usize>)> {
    let m = g.num_edges();
    let mut out = Vec::new();
    'masks: for mask in 0..1u64 << m {
        let mut uf = UnionFind::new(g.num_vertices());
        for e in 0..m {
            if mask >> e & 1 == 1 {
                let (a, b) = g.edge(e);
                if !uf.union(a, b) {
                    continue 'masks;
                }
            }
        }
        out.push((mask, (0..g.num_vertices()).map(|v| uf.find(v)).collect()));
    }
    out
}

/// Whether a forest with components `comp` contributes to the forest
/// polynomial of `part` (given in boundary labels, placed by `at`).
fn forest_fits(part: &VertexPartition, comp: &[usize], at: &[usize]) -> bool {
    let mut trees: Vec<usize> = comp.to_vec();
    trees.sort_unstable();
    trees.dedup();
    if part.is_connected() {
        return trees.len() == 1;
    }
    if part.num_blocks() != trees.len() {
        return false;
    }
    let mut owner: Vec<Option<usize>> = vec![None; comp.len()];
    let mut hit: Vec<usize> = Vec::new();
    for (bi, b) in part.blocks().iter().enumerate() {
        let t = comp[at[b[0]]];
        for &l in b {
            let v = at[l];
            if comp[v] != t {
                return false;
            }
            match owner[v] {
                Some(o) if o != bi => return false,
                _ => owner[v] = Some(bi),
            }
        }
        if hit.contains(&t) {
            return false;
        }
        hit.push(t);
    }
    true
}

/// Value of every state on the minimal chain: the coefficient of
/// ∏ a_e^{p-1} in the product of its factors, mod p.
///
/// Each factor contributes the complement of one of its forests, so the
/// value counts ways of choosing a forest per factor such that every edge
/// is missed by exactly p-1 forests. States are processed in sorted order
/// so consecutive states reuse the shared part of the computation.
pub fn initial_conditions(
    family: Family,
    p: u32,
    partitions: &[VertexPartition],
    states: &[ProductState],
) -> Result<Vec<u8>, TransferError> {
    check_prime(p)?;
    let g = family.chain(MINIMAL_CHAIN);
    let at = Family::boundary_vertices(MINIMAL_CHAIN);
    let m = g.num_edges();
    let all = forests(&g);
    // Count per edge of forests *avoiding* it, in base p.
    let size = (p as usize).pow(m as u32);
    let place: Vec<usize> = (0..m).map(|e| (p as usize).pow(e as u32)).collect();
    let full_mask: Vec<EdgeMask> = (0..size)
        .map(|mut code| {
            let mut full = 0;
            for e in 0..m {
                if code % p as usize == p as usize - 1 {
                    full |= 1 << e;
                }
                code /= p as usize;
            }
            full
        })
        .collect();
    let every: EdgeMask = (1 << m) - 1;
    let shifts: Vec<Vec<(EdgeMask, usize)>> = partitions
        .iter()
        .map(|q| {
            all.iter()
                .filter(|(_, comp)| forest_fits(q, comp, &at))
                .map(|(f, _)| {
                    let missed = every & !f;
                    (missed, (0..m).filter(|&e| missed >> e & 1 == 1).map(|e| place[e]).sum())
                })
                .collect()
        })
        .collect();
    let target = size - 1;

    let chunk = (states.len() / (4 * rayon::current_num_threads()).max(1)).clamp(64, 1 << 14);
    let parts: Vec<Vec<u8>> = states
        .par_chunks(chunk)
        .map(|block| {
            let mut out = Vec::with_capacity(block.len());
            // stack[d] holds the distribution after the first d factors of
            // `prev`.
            let mut stack: Vec<Vec<u32>> = Vec::new();
            let mut base = vec![0u32; size];
            base[0] = 1;
            stack.push(base);
            let mut prev: &[u16] = &[];
            for st in block {
                let common = prev.iter().zip(st.iter()).take_while(|(a, b)| a == b).count().min(st.len().saturating_sub(1));
                stack.truncate(common + 1);
                for &f in &st[common..st.len() - 1] {
                    let cur = stack.last().expect("base level");
                    let mut next = vec![0u32; size];
                    for (code, &c) in cur.iter().enumerate() {
                        if c == 0 {
                            continue;
                        }
                        let full = full_mask[code];
                        for &(missed, add) in &shifts[f as usize] {
                            if full & missed == 0 {
                                let t = &mut next[code + add];
                                *t = (*t + c) % p;
                            }
                        }
                    }
                    stack.push(next);
                }
                // Last factor: only the target entry matters. Every digit of
                // the target is p-1, so subtracting a shift never borrows.
                let cur = stack.last().expect("base level");
                let acc: u64 = match st.last() {
                    Some(&last) => shifts[last as usize].iter().map(|&(_, add)| cur[target - add] as u64).sum(),
                    None => cur[target] as u64,
                };
                out.push((acc % p as u64) as u8);
                prev = st;
            }
            out
        })
        .collect();
    Ok(parts.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_chain_forests() {
        let g = Family::C13.chain(MINIMAL_CHAIN);
        let f = forests(&g);
        let at = Family::boundary_vertices(MINIMAL_CHAIN);
        let trees = f.iter().filter(|(_, c)| forest_fits(&VertexPartition::connected(), c, &at)).count();
        assert_eq!(trees as u64, g.spanning_trees().unwrap().len() as u64);
        // L2 and R0 share a vertex, so separating them is impossible.
        let apart = VertexPartition::new(vec![vec![2], vec![3]]).unwrap();
        assert!(f.iter().all(|(_, c)| !forest_fits(&apart, c, &at)));
    }
}
