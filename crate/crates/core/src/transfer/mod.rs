//! Transfer-matrix computation of c2 along the circulant families.
//!
//! A state is a product of 2p-2 forest polynomials over the six boundary
//! labels of a chain. Reducing the two edges at the left end of the chain
//! writes every state as a combination of states one vertex shorter; the
//! resulting sparse matrix, started from the values of each state on the
//! minimal chain, yields c2 for every n by plain iteration.

mod build;
mod checkpoint;
pub mod family;
mod initial;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{chain_step, BuildConfig, LocalRules, WorklistOrder};
pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use family::Family;
pub use initial::initial_conditions;

use crate::field::{is_prime, Fp};
use crate::forest::ForestError;
use crate::partition::VertexPartition;

/// Largest prime the engine accepts; matrix entries are stored as bytes.
pub const MAX_PRIME: u32 = 251;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("p = {0} exceeds the engine limit of {MAX_PRIME}")]
    PrimeTooLarge(u32),
    #[error("state limit of {limit} reached after processing {processed} rows")]
    TooManyStates { limit: usize, processed: usize },
    #[error("rows, initial vector or weights out of range")]
    Malformed,
    #[error("more than {0} distinct partitions")]
    TooManyPartitions(usize),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Sorted multiset of interned partition ids.
pub type ProductState = Box<[u16]>;

/// The recurrence for one family at one prime.
#[derive(Clone)]
pub struct TransferSystem {
    family: Family,
    p: u32,
    partitions: Vec<VertexPartition>,
    states: Vec<ProductState>,
    row_ptr: Vec<u64>,
    cols: Vec<u32>,
    vals: Vec<u8>,
    initial: Vec<u8>,
    weights: Vec<(u32, u8)>,
}

impl fmt::Debug for TransferSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransferSystem")
            .field("family", &self.family)
            .field("p", &self.p)
            .field("states", &self.states.len())
            .field("nonzeros", &self.vals.len())
            .finish()
    }
}

pub(crate) fn check_prime(p: u32) -> Result<Fp, TransferError> {
    if !is_prime(p) {
        return Err(TransferError::NotPrime(p));
    }
    if p > MAX_PRIME {
        return Err(TransferError::PrimeTooLarge(p));
    }
    Ok(Fp::new(p).expect("checked prime"))
}

impl TransferSystem {
    /// Discover all states, build the matrix and evaluate the initial vector.
    pub fn build(family: Family, p: u32, cfg: &BuildConfig) -> Result<Self, TransferError> {
        let built = build::discover(family, p, cfg)?;
        let initial = initial::initial_conditions(family, p, &built.partitions, &built.states)?;
        Ok(TransferSystem { family, initial, ..built })
    }

    /// Assemble a system from explicit rows, for hand-built examples.
    /// States carry no factors.
    pub fn from_parts(family: Family, p: u32, rows: Vec<Vec<(u32, u8)>>, initial: Vec<u8>, weights: Vec<(u32, u8)>) -> Result<Self, TransferError> {
        check_prime(p)?;
        let n = rows.len();
        let bad = |v: u8| v as u32 >= p;
        if initial.len() != n
            || initial.iter().any(|&v| bad(v))
            || weights.iter().any(|&(i, w)| i as usize >= n || bad(w))
            || rows.iter().flatten().any(|&(j, c)| j as usize >= n || bad(c))
        {
            return Err(TransferError::Malformed);
        }
        let mut row_ptr = vec![0u64];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for row in rows {
            for (j, c) in row {
                cols.push(j);
                vals.push(c);
            }
            row_ptr.push(cols.len() as u64);
        }
        let states = vec![ProductState::default(); n];
        Ok(TransferSystem { family, p, partitions: Vec::new(), states, row_ptr, cols, vals, initial, weights })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of states N.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    /// The factors of state `i`.
    pub fn state(&self, i: usize) -> Vec<&VertexPartition> {
        self.states[i].iter().map(|&id| &self.partitions[id as usize]).collect()
    }

    /// Row `i` as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (u32, u8)> + '_ {
        let (a, b) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// Values of the states on the minimal chain.
    pub fn initial_vector(&self) -> &[u8] {
        &self.initial
    }

    /// Sparse output functional: the seed states with their weights.
    pub fn weights(&self) -> &[(u32, u8)] {
        &self.weights
    }

    /// One step of the recurrence: the state values one vertex further
    /// along the chain.
    pub fn step(&self, v: &[u8], out: &mut [u8]) {
        let p = self.p as u64;
        let row = |i: usize| {
            let (a, b) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
            let mut acc = 0u64;
            for k in a..b {
                acc += self.vals[k] as u64 * v[self.cols[k] as usize] as u64;
            }
            (acc % p) as u8
        };
        if self.vals.len() < 1 << 16 {
            out.iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
        } else {
            out.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
                for (k, o) in chunk.iter_mut().enumerate() {
                    *o = row(c * 4096 + k);
                }
            });
        }
    }

    /// The weighted seed sum w·v. With the factor products taken at face
    /// value this is the coefficient whose negative is c2.
    pub fn bracket(&self, v: &[u8]) -> u32 {
        let p = self.p as u64;
        (self.weights.iter().map(|&(i, w)| w as u64 * v[i as usize] as u64).sum::<u64>() % p) as u32
    }

    /// c2 of the family member whose state vector is `v`.
    pub fn c2_of(&self, v: &[u8]) -> u32 {
        let b = self.bracket(v);
        (self.p - b) % self.p
    }

    /// n of the family member reached after `steps` steps from the minimal
    /// chain.
    pub fn n_after(&self, steps: u64) -> u64 {
        self.family.first_n() as u64 - 1 + steps
    }

    /// Start iterating from the minimal chain.
    pub fn runner(&self) -> Runner<'_> {
        Runner { sys: self, v: self.initial.clone(), scratch: vec![0; self.len()], steps: 0, sequence: Vec::new(), hash: checkpoint::RollingHash::new() }
    }

    /// Resume from a checkpoint taken on this system.
    pub fn resume(&self, ck: Checkpoint) -> Result<Runner<'_>, TransferError> {
        ck.check_matches(self)?;
        let hash = checkpoint::RollingHash::over(&ck.sequence);
        if hash.value() != ck.sequence_hash {
            return Err(CheckpointError::HashMismatch.into());
        }
        Ok(Runner { sys: self, v: ck.vector, scratch: vec![0; self.len()], steps: ck.steps, sequence: ck.sequence, hash })
    }

    /// Sparse triplets `row col value`, one per line, preceded by a header.
    pub fn write_triplets<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} p={} N={} nnz={}", self.family, self.p, self.len(), self.nonzeros())?;
        for i in 0..self.len() {
            for (c, v) in self.row(i) {
                writeln!(w, "{i} {c} {v}")?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> SystemSummary {
        SystemSummary { family: self.family, p: self.p, states: self.len(), nonzeros: self.nonzeros(), seeds: self.weights.len(), first_n: self.family.first_n() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub family: Family,
    pub p: u32,
    pub states: usize,
    pub nonzeros: usize,
    pub seeds: usize,
    pub first_n: usize,
}

/// Iteration state: the current vector and the c2 values emitted so far.
pub struct Runner<'a> {
    sys: &'a TransferSystem,
    v: Vec<u8>,
    scratch: Vec<u8>,
    steps: u64,
    sequence: Vec<u8>,
    hash: checkpoint::RollingHash,
}

impl Runner<'_> {
    /// Advance one step and return (n, c2).
    pub fn next_value(&mut self) -> (u64, u32) {
        self.sys.step(&self.v, &mut self.scratch);
        std::mem::swap(&mut self.v, &mut self.scratch);
        self.steps += 1;
        let c2 = self.sys.c2_of(&self.v);
        self.sequence.push(c2 as u8);
        self.hash.push(c2 as u8);
        (self.sys.n_after(self.steps), c2)
    }

    /// Steps taken from the minimal chain.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn vector(&self) -> &[u8] {
        &self.v
    }

    /// All c2 values emitted, starting at the family's first n.
    pub fn sequence(&self) -> &[u8] {
        &self.sequence
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            family: self.sys.family,
            p: self.sys.p,
            states: self.sys.len() as u64,
            steps: self.steps,
            vector: self.v.clone(),
            sequence: self.sequence.clone(),
            sequence_hash: self.hash.value(),
        }
    }
}

impl Iterator for Runner<'_> {
    type Item = (u64, u32);

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_value())
    }
}
