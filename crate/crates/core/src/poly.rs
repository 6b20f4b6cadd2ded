//! Multilinear polynomials over F_p, Kirchhoff and Dodgson polynomials, point
//! counting, and the brute-force c2 oracle.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{is_prime, Fp};
use crate::graph::{EdgeMask, Graph, GraphError, MAX_ENUM_EDGES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("point counting supports primes below 256, got {0}")]
    PrimeTooLarge(u32),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph needs at least 3 vertices, has {0}")]
    TooFewVertices(usize),
    #[error("oracle out of range: {p}^{vars} evaluations exceeds the configured ceiling of {ceiling}")]
    OutOfRange { p: u32, vars: u32, ceiling: u64 },
    #[error("point count {count} is not divisible by {p}^2")]
    Divisibility { count: u64, p: u32 },
    #[error("total degree {degree} differs from the variable count {vars}")]
    DegreeMismatch { degree: u32, vars: u32 },
    #[error("Dodgson index sets must have equal size, got |I| = {0} and |J| = {1}")]
    UnequalIndexSets(usize, usize),
    #[error("invalid edge choice: {0}")]
    BadEdges(String),
    #[error("need 2 + |E| <= 2|V|, have |E| = {edges} and |V| = {vertices}")]
    Hypothesis { edges: usize, vertices: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Limits on brute-force work.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Maximum number of points p^m visited by a point count.
    pub max_evaluations: u64,
    /// Maximum number of variables for dense coefficient tables.
    pub max_dense_vars: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_evaluations: 1 << 34, max_dense_vars: 28 }
    }
}

/// A multilinear polynomial over F_p whose variables are edge indices.
///
/// `vars` is the declared variable set: point counts run over F_p^|vars|
/// even when some declared variable does not occur in any monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearPoly {
    p: u32,
    vars: EdgeMask,
    terms: BTreeMap<EdgeMask, u32>,
}

impl MultilinearPoly {
    pub fn zero(p: u32, vars: EdgeMask) -> Self {
        MultilinearPoly { p, vars, terms: BTreeMap::new() }
    }

    /// Collect terms, reducing coefficients mod p and dropping zeros.
    ///
    /// Panics if a monomial uses an undeclared variable.
    pub fn from_terms<I: IntoIterator<Item = (EdgeMask, i64)>>(p: u32, vars: EdgeMask, terms: I) -> Self {
        let fp = Fp::new(p).expect("prime modulus");
        let mut out = Self::zero(p, vars);
        for (m, c) in terms {
            assert_eq!(m & !vars, 0, "monomial {m:#b} outside the variable set {vars:#b}");
            out.add_term(m, fp.from_i64(c));
        }
        out
    }

    fn add_term(&mut self, m: EdgeMask, c: u32) {
        let fp = Fp::new(self.p).expect("prime modulus");
        let e = self.terms.entry(m).or_insert(0);
        *e = fp.add(*e, c);
        if *e == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn vars(&self) -> EdgeMask {
        self.vars
    }

    pub fn num_vars(&self) -> u32 {
        self.vars.count_ones()
    }

    pub fn terms(&self) -> &BTreeMap<EdgeMask, u32> {
        &self.terms
    }

    pub fn coefficient(&self, m: EdgeMask) -> u32 {
        self.terms.get(&m).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Self {
        let fp = Fp::new(self.p).expect("prime modulus");
        MultilinearPoly {
            p: self.p,
            vars: self.vars,
            terms: self.terms.iter().map(|(&m, &c)| (m, fp.neg(c))).collect(),
        }
    }

    /// Equality of monomials and coefficients, ignoring declared variable sets.
    pub fn same_terms(&self, other: &Self) -> bool {
        self.p == other.p && self.terms == other.terms
    }

    /// True if `self == other` or `self == -other`.
    pub fn eq_up_to_sign(&self, other: &Self) -> bool {
        self.same_terms(other) || self.same_terms(&other.neg())
    }

    /// Evaluate at a point given as values indexed by edge.
    pub fn eval(&self, point: &[u32]) -> u32 {
        let fp = Fp::new(self.p).expect("prime modulus");
        let mut acc = 0;
        for (&m, &c) in &self.terms {
            let mut t = c;
            let mut bits = m;
            while bits != 0 {
                let e = bits.trailing_zeros() as usize;
                t = fp.mul(t, point[e] % self.p);
                bits &= bits - 1;
            }
            acc = fp.add(acc, t);
        }
        acc
    }

    /// Rename variables through a permutation of edge indices.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        let map = |m: EdgeMask| {
            let mut out = 0;
            let mut bits = m;
            while bits != 0 {
                let e = bits.trailing_zeros() as usize;
                out |= 1 << perm[e];
                bits &= bits - 1;
            }
            out
        };
        MultilinearPoly {
            p: self.p,
            vars: map(self.vars),
            terms: self.terms.iter().map(|(&m, &c)| (map(m), c)).collect(),
        }
    }

    /// Dense coefficient table over the positions of `vars` (bit t of the
    /// index is the t-th variable of `vars` in ascending order).
    fn dense_over(&self, vars: EdgeMask) -> Vec<u8> {
        let positions: Vec<u32> = bit_positions(vars);
        let mut table = vec![0u8; 1usize << positions.len()];
        for (&m, &c) in &self.terms {
            let mut idx = 0usize;
            for (t, &e) in positions.iter().enumerate() {
                if m >> e & 1 == 1 {
                    idx |= 1 << t;
                }
            }
            table[idx] = c as u8;
        }
        table
    }
}

fn bit_positions(mask: EdgeMask) -> Vec<u32> {
    (0..64).filter(|&e| mask >> e & 1 == 1).collect()
}

fn full_mask(m: usize) -> EdgeMask {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

fn check_prime(p: u32) -> Result<Fp, OracleError> {
    Fp::new(p).map_err(|_| OracleError::NotPrime(p))
}

/// Dual Kirchhoff polynomial: one monomial per spanning tree, made of the
/// edges outside the tree.
pub fn kirchhoff(g: &Graph, p: u32) -> Result<MultilinearPoly, OracleError> {
    check_prime(p)?;
    if !g.is_connected() {
        return Err(OracleError::Disconnected);
    }
    let all = full_mask(g.num_edges());
    let mut terms = BTreeMap::new();
    for t in g.spanning_trees()? {
        terms.insert(all & !t, 1 % p);
    }
    terms.retain(|_, c| *c != 0);
    Ok(MultilinearPoly { p, vars: all, terms })
}

/// The expanded Laplacian [[Λ, Eᵗ], [-E, 0]] with rows and columns ordered as
/// edges ascending, then vertices ascending without the highest label.
#[derive(Debug, Clone)]
pub struct ExpandedLaplacian {
    m: usize,
    /// Integer entries of the full matrix with the diagonal Λ slots zeroed.
    fixed: Vec<Vec<i64>>,
}

impl ExpandedLaplacian {
    pub fn new(g: &Graph) -> Result<Self, OracleError> {
        if g.num_vertices() == 0 {
            return Err(OracleError::TooFewVertices(0));
        }
        let m = g.num_edges();
        let e = g.reduced_incidence(g.num_vertices() - 1)?;
        let r = e.len();
        let size = m + r;
        let mut fixed = vec![vec![0i64; size]; size];
        for v in 0..r {
            for ed in 0..m {
                fixed[ed][m + v] = e[v][ed];
                fixed[m + v][ed] = -e[v][ed];
            }
        }
        Ok(ExpandedLaplacian { m, fixed })
    }

    pub fn size(&self) -> usize {
        self.fixed.len()
    }

    /// det of M with rows `rows_out` and columns `cols_out` (edge indices)
    /// removed and a_e = 1 exactly for e in `ones`, over F_p.
    pub fn minor_det(&self, fp: Fp, rows_out: EdgeMask, cols_out: EdgeMask, ones: EdgeMask) -> u32 {
        let keep = |i: usize, out: EdgeMask| i >= self.m || out >> i & 1 == 0;
        let rows: Vec<usize> = (0..self.size()).filter(|&i| keep(i, rows_out)).collect();
        let cols: Vec<usize> = (0..self.size()).filter(|&i| keep(i, cols_out)).collect();
        let mut a: Vec<Vec<u32>> = rows
            .iter()
            .map(|&i| {
                cols.iter()
                    .map(|&j| {
                        if i == j && i < self.m {
                            (ones >> i & 1) as u32 % fp.p()
                        } else {
                            fp.from_i64(self.fixed[i][j])
                        }
                    })
                    .collect()
            })
            .collect();
        det_mod(fp, &mut a)
    }
}

/// Determinant over F_p by Gaussian elimination (destroys `a`).
pub(crate) fn det_mod(fp: Fp, a: &mut [Vec<u32>]) -> u32 {
    let n = a.len();
    let p = fp.p() as u64;
    let mut det = 1u32;
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| a[r][c] != 0) else {
            return 0;
        };
        if piv != c {
            a.swap(piv, c);
            det = fp.neg(det);
        }
        det = fp.mul(det, a[c][c]);
        let inv = fp.inv(a[c][c]) as u64;
        let (top, bottom) = a.split_at_mut(c + 1);
        let pivot_row = &top[c];
        for row in bottom.iter_mut() {
            if row[c] == 0 {
                continue;
            }
            let factor = (row[c] as u64 * inv) % p;
            for k in c..n {
                let sub = factor * pivot_row[k] as u64 % p;
                row[k] = ((row[k] as u64 + p - sub) % p) as u32;
            }
        }
    }
    det
}

/// Dodgson polynomial: det of the expanded Laplacian with edge rows `i_set`
/// and edge columns `j_set` removed and a_e = 0 for e in `k_set`.
///
/// Computed from the values on {0,1}^vars by Möbius inversion, which is exact
/// because each variable occurs in a single matrix entry.
pub fn dodgson(g: &Graph, i_set: &[usize], j_set: &[usize], k_set: &[usize], p: u32) -> Result<MultilinearPoly, OracleError> {
    let fp = check_prime(p)?;
    if i_set.len() != j_set.len() {
        return Err(OracleError::UnequalIndexSets(i_set.len(), j_set.len()));
    }
    let m = g.num_edges();
    if m > MAX_ENUM_EDGES {
        return Err(GraphError::TooManyEdges(m).into());
    }
    let mask = |s: &[usize]| -> Result<EdgeMask, OracleError> {
        let mut out = 0;
        for &e in s {
            if e >= m {
                return Err(OracleError::BadEdges(format!("edge {e} out of range")));
            }
            out |= 1 << e;
        }
        Ok(out)
    };
    let (im, jm, km) = (mask(i_set)?, mask(j_set)?, mask(k_set)?);
    if im.count_ones() as usize != i_set.len() || jm.count_ones() as usize != j_set.len() {
        return Err(OracleError::BadEdges("repeated edge in I or J".into()));
    }
    let vars = full_mask(m) & !(im | jm | km);
    let lap = ExpandedLaplacian::new(g)?;
    let positions = bit_positions(vars);
    let k = positions.len();
    let spread = |idx: usize| -> EdgeMask {
        let mut out = 0;
        for (t, &e) in positions.iter().enumerate() {
            if idx >> t & 1 == 1 {
                out |= 1 << e;
            }
        }
        out
    };
    let mut values: Vec<u32> = (0..1usize << k)
        .into_par_iter()
        .map(|idx| lap.minor_det(fp, im, jm, spread(idx)))
        .collect();
    // Möbius inversion on the subset lattice.
    for t in 0..k {
        for idx in 0..values.len() {
            if idx >> t & 1 == 1 {
                values[idx] = fp.sub(values[idx], values[idx ^ (1 << t)]);
            }
        }
    }
    let mut poly = MultilinearPoly::zero(p, vars);
    for (idx, &c) in values.iter().enumerate() {
        if c != 0 {
            poly.terms.insert(spread(idx), c);
        }
    }
    Ok(poly)
}

/// One coefficient of a Dodgson polynomial: the coefficient of the monomial
/// `mono` in det(M(I,J)) with a_K = 0, over F_p. Costs 2^|mono| determinants,
/// so it stays cheap when the full polynomial would not.
pub fn dodgson_coefficient(
    g: &Graph,
    i_set: &[usize],
    j_set: &[usize],
    k_set: &[usize],
    mono: EdgeMask,
    p: u32,
) -> Result<u32, OracleError> {
    let fp = check_prime(p)?;
    if i_set.len() != j_set.len() {
        return Err(OracleError::UnequalIndexSets(i_set.len(), j_set.len()));
    }
    let m = g.num_edges();
    if m > MAX_ENUM_EDGES || i_set.iter().chain(j_set).chain(k_set).any(|&e| e >= m) {
        return Err(OracleError::BadEdges("edge out of range".into()));
    }
    let to_mask = |s: &[usize]| s.iter().fold(0u64, |acc, &e| acc | 1 << e);
    let (im, jm, km) = (to_mask(i_set), to_mask(j_set), to_mask(k_set));
    if mono & (im | jm | km) != 0 {
        return Ok(0);
    }
    let lap = ExpandedLaplacian::new(g)?;
    let positions = bit_positions(mono);
    let mut acc = 0u32;
    for sub in 0..1usize << positions.len() {
        let mut ones = 0u64;
        for (t, &e) in positions.iter().enumerate() {
            if sub >> t & 1 == 1 {
                ones |= 1 << e;
            }
        }
        let d = lap.minor_det(fp, im, jm, ones);
        let odd = (positions.len() - sub.count_ones() as usize) % 2 == 1;
        acc = if odd { fp.sub(acc, d) } else { fp.add(acc, d) };
    }
    Ok(acc)
}

/// Number of zeros of `f` over F_p^|vars|.
pub fn point_count(f: &MultilinearPoly, cfg: &OracleConfig) -> Result<u64, OracleError> {
    point_count_product(&[f], cfg)
}

/// Number of zeros of the product of `factors` over F_p^n, where the
/// variables are the union of the factors' declared variables.
pub fn point_count_product(factors: &[&MultilinearPoly], cfg: &OracleConfig) -> Result<u64, OracleError> {
    let p = factors.first().map(|f| f.p).ok_or_else(|| OracleError::BadEdges("empty product".into()))?;
    if !is_prime(p) {
        return Err(OracleError::NotPrime(p));
    }
    if p >= 256 {
        return Err(OracleError::PrimeTooLarge(p));
    }
    assert!(factors.iter().all(|f| f.p == p), "factors over different fields");
    if factors.len() > 64 {
        return Err(OracleError::BadEdges("at most 64 factors".into()));
    }
    let vars = factors.iter().fold(0, |acc, f| acc | f.vars);
    let k = vars.count_ones();
    let evaluations = (p as u128).checked_pow(k).unwrap_or(u128::MAX);
    if evaluations > cfg.max_evaluations as u128 || k > cfg.max_dense_vars {
        return Err(OracleError::OutOfRange { p, vars: k, ceiling: cfg.max_evaluations });
    }
    let tables: Vec<Vec<u8>> = factors.iter().map(|f| f.dense_over(vars)).collect();
    if k == 0 {
        return Ok(tables.iter().any(|t| t[0] == 0) as u64);
    }
    let counter = Counter::new(p, factors.len(), k as usize);
    // Split on the highest variable for parallelism.
    let total: u64 = (0..p as u8)
        .into_par_iter()
        .map(|t| {
            // Level d of a factor lives at [2^d, 2^(d+1)) of its buffer.
            let mut bufs: Vec<Vec<u8>> = tables.iter().map(|_| vec![0u8; 1 << k]).collect();
            for (buf, tab) in bufs.iter_mut().zip(&tables) {
                let top = k as usize - 1;
                counter.substitute(tab, t, &mut buf[1 << top..1 << (top + 1)]);
            }
            counter.count_level(&mut bufs, k as usize - 1)
        })
        .sum();
    Ok(total)
}

/// Largest lookup table built for the bottom of the substitution recursion.
const LUT_ENTRIES: u64 = 1 << 20;

type Lut = std::sync::Arc<(usize, Vec<u16>)>;

/// Zero counts of every residual product on the last `leaf` variables,
/// keyed by their coefficients; cached per (p, number of factors).
fn leaf_table(p: u32, factors: usize) -> Lut {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<(u32, usize), Lut>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("lookup cache").get(&(p, factors)) {
        return t.clone();
    }
    let mut leaf = 0;
    while (p as u64).checked_pow((factors << (leaf + 1)) as u32).is_some_and(|s| s <= LUT_ENTRIES) {
        leaf += 1;
    }
    let (pu, width) = (p as usize, factors << leaf);
    let points: Vec<Vec<usize>> = (0..pu.pow(leaf as u32))
        .map(|pt| (0..leaf).map(|v| pt / pu.pow(v as u32) % pu).collect())
        .collect();
    // monomial value at each point, for each monomial index
    let mono: Vec<Vec<usize>> = points
        .iter()
        .map(|x| {
            (0..1usize << leaf)
                .map(|m| (0..leaf).filter(|&v| m >> v & 1 == 1).fold(1, |acc, v| acc * x[v] % pu))
                .collect()
        })
        .collect();
    let mut digits = vec![0usize; width];
    let mut lut = Vec::with_capacity(pu.pow(width as u32));
    for _ in 0..pu.pow(width as u32) {
        let zeros = mono
            .iter()
            .filter(|mv| {
                digits.chunks(1 << leaf).any(|coef| coef.iter().zip(mv.iter()).map(|(c, m)| c * m).sum::<usize>() % pu == 0)
            })
            .count();
        lut.push(zeros as u16);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < pu {
                break;
            }
            *d = 0;
        }
    }
    let t: Lut = std::sync::Arc::new((leaf, lut));
    cache.lock().expect("lookup cache").insert((p, factors), t.clone());
    t
}

/// dst = dst + src mod p, elementwise (values below p <= 255).
#[inline]
fn add_mod(dst: &mut [u8], src: &[u8], p: u8) {
    for (d, &s) in dst.iter_mut().zip(src) {
        let v = *d as u16 + s as u16;
        *d = if v >= p as u16 { v - p as u16 } else { v } as u8;
    }
}

/// Recursive substitution counter over u8 tables. The last variables are
/// resolved through a lookup table keyed by the residual coefficients of all
/// factors.
struct Counter {
    p: u8,
    mul: Vec<Vec<u8>>,
    leaf: usize,
    lut: Lut,
}

impl Counter {
    fn new(p: u32, factors: usize, k: usize) -> Self {
        let mul: Vec<Vec<u8>> = (0..p).map(|t| (0..p).map(|b| ((t * b) % p) as u8).collect()).collect();
        let lut = leaf_table(p, factors);
        Counter { p: p as u8, mul, leaf: lut.0.min(k), lut }
    }

    /// child = f0 + t * f1 where f = f0 + x f1 in the top variable.
    #[inline]
    fn substitute(&self, parent: &[u8], t: u8, child: &mut [u8]) {
        let half = parent.len() / 2;
        let (f0, f1) = parent.split_at(half);
        if t == 0 {
            child.copy_from_slice(f0);
            return;
        }
        let mt = &self.mul[t as usize];
        let p = self.p as u16;
        for ((c, &a), &b) in child.iter_mut().zip(f0).zip(f1) {
            let s = a as u16 + mt[b as usize] as u16;
            *c = if s >= p { s - p } else { s } as u8;
        }
    }

    /// Hot path one level above the table: substitute the top variable and
    /// form the lookup key in one pass without writing the child level.
    #[inline]
    fn count_last_split(&self, bufs: &[Vec<u8>], level: usize) -> u64 {
        let p = self.p as usize;
        let half = 1usize << (level - 1);
        let lut = &self.lut.1;
        let mut cur = [0u8; 64];
        let width = half * bufs.len();
        for (f, buf) in bufs.iter().enumerate() {
            cur[f * half..(f + 1) * half].copy_from_slice(&buf[1 << level..(1 << level) + half]);
        }
        let mut total = 0u64;
        for t in 0..self.p {
            if t > 0 {
                for (f, buf) in bufs.iter().enumerate() {
                    let f1 = &buf[(1 << level) + half..1 << (level + 1)];
                    add_mod(&mut cur[f * half..(f + 1) * half], f1, self.p);
                }
            }
            let key = cur[..width].iter().rev().fold(0usize, |k, &c| k * p + c as usize);
            total += lut[key] as u64;
        }
        total
    }

    /// Count zeros of the product when level `level` of each buffer holds a
    /// factor in `level` variables.
    fn count_level(&self, bufs: &mut [Vec<u8>], level: usize) -> u64 {
        if level <= self.leaf {
            // Tables for fewer variables are padded with zero coefficients;
            // the extra free variables multiply the count.
            let full = self.lut.0;
            let width = 1usize << full;
            let p = self.p as usize;
            let mut key = 0usize;
            for buf in bufs.iter().rev() {
                let coef = &buf[1 << level..1 << (level + 1)];
                for i in (0..width).rev() {
                    key = key * p + if i < coef.len() { coef[i] as usize } else { 0 };
                }
            }
            return self.lut.1[key] as u64 / (p as u64).pow((full - level) as u32);
        }
        if level == self.leaf + 1 && self.leaf == self.lut.0 {
            return self.count_last_split(bufs, level);
        }
        // Values t = 0, 1, ... in order: the child f0 + t f1 is updated by
        // adding f1 each time, which deeper levels never overwrite.
        let mut total = 0;
        for t in 0..self.p {
            for buf in bufs.iter_mut() {
                let (lo, hi) = buf.split_at_mut(1 << level);
                let (f0, f1) = hi[..1 << level].split_at(1 << (level - 1));
                let child = &mut lo[1 << (level - 1)..];
                if t == 0 {
                    child.copy_from_slice(f0);
                } else {
                    add_mod(child, f1, self.p);
                }
            }
            total += self.count_level(bufs, level - 1);
        }
        total
    }
}

/// A c2 value together with the point count it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct C2Value {
    pub value: u32,
    pub count: u64,
}

/// c2 from the definition: [Ψ_g]_p / p² mod p.
pub fn c2_direct(g: &Graph, p: u32, cfg: &OracleConfig) -> Result<C2Value, OracleError> {
    check_prime(p)?;
    if g.num_vertices() < 3 {
        return Err(OracleError::TooFewVertices(g.num_vertices()));
    }
    let psi = kirchhoff(g, p)?;
    let count = point_count(&psi, cfg)?;
    let pp = p as u64 * p as u64;
    if count % pp != 0 {
        return Err(OracleError::Divisibility { count, p });
    }
    Ok(C2Value { value: ((count / pp) % p as u64) as u32, count })
}

fn check_triple(g: &Graph, (i, j, k): (usize, usize, usize)) -> Result<(), OracleError> {
    let m = g.num_edges();
    if i == j || j == k || i == k || i >= m || j >= m || k >= m {
        return Err(OracleError::BadEdges(format!("({i},{j},{k}) must be distinct edges below {m}")));
    }
    if 2 + m > 2 * g.num_vertices() {
        return Err(OracleError::Hypothesis { edges: m, vertices: g.num_vertices() });
    }
    Ok(())
}

/// The two Dodgson factors Ψ^{ik,jk} and Ψ^{i,j}_k of the three-edge formula.
pub fn lemma3_factors(g: &Graph, p: u32, ijk: (usize, usize, usize)) -> Result<[MultilinearPoly; 2], OracleError> {
    check_prime(p)?;
    check_triple(g, ijk)?;
    let (i, j, k) = ijk;
    Ok([dodgson(g, &[i, k], &[j, k], &[], p)?, dodgson(g, &[i], &[j], &[k], p)?])
}

/// c2 = -[Ψ^{ik,jk} Ψ^{i,j}_k]_p mod p.
pub fn c2_lemma3(g: &Graph, p: u32, ijk: (usize, usize, usize), cfg: &OracleConfig) -> Result<C2Value, OracleError> {
    let [a, b] = lemma3_factors(g, p, ijk)?;
    let count = point_count_product(&[&a, &b], cfg)?;
    Ok(C2Value { value: ((p as u64 - count % p as u64) % p as u64) as u32, count })
}

/// Coefficient of ∏ x^{p-1} in F^{p-1}, where F is the product of `factors`
/// and the variables are the union of their declared variables. The total
/// degree of F must equal the number of variables.
pub fn cw_coefficient(factors: &[&MultilinearPoly], cfg: &OracleConfig) -> Result<u32, OracleError> {
    let p = factors.first().map(|f| f.p).ok_or_else(|| OracleError::BadEdges("empty product".into()))?;
    let fp = check_prime(p)?;
    if p >= 256 {
        return Err(OracleError::PrimeTooLarge(p));
    }
    let vars = factors.iter().fold(0, |acc, f| acc | f.vars);
    let n = vars.count_ones();
    let degree: u32 = factors.iter().map(|f| f.degree()).sum();
    if degree != n || factors.iter().any(|f| f.is_zero()) {
        return Err(OracleError::DegreeMismatch { degree, vars: n });
    }
    let size = (p as u128).checked_pow(n).unwrap_or(u128::MAX);
    if size > cfg.max_evaluations as u128 || size > 1 << cfg.max_dense_vars {
        return Err(OracleError::OutOfRange { p, vars: n, ceiling: cfg.max_evaluations });
    }
    let size = size as usize;
    let positions = bit_positions(vars);
    let cap = p as usize - 1;
    // free[idx] has bit t set when the exponent of variable t is below p-1.
    let mut free = vec![0u64; size];
    for (idx, slot) in free.iter_mut().enumerate() {
        let mut r = idx;
        for t in 0..n as usize {
            if r % p as usize != cap {
                *slot |= 1 << t;
            }
            r /= p as usize;
        }
    }
    let mut pw = vec![1usize; n as usize];
    for t in 1..n as usize {
        pw[t] = pw[t - 1] * p as usize;
    }
    let local: Vec<Vec<(u64, usize, u8)>> = factors
        .iter()
        .map(|f| {
            f.terms
                .iter()
                .map(|(&m, &c)| {
                    let mut lm = 0u64;
                    let mut off = 0usize;
                    for (t, &e) in positions.iter().enumerate() {
                        if m >> e & 1 == 1 {
                            lm |= 1 << t;
                            off += pw[t];
                        }
                    }
                    (lm, off, c as u8)
                })
                .collect()
        })
        .collect();
    let mut cur = vec![0u8; size];
    cur[0] = 1;
    let mut next = vec![0u8; size];
    for _ in 0..cap {
        for terms in &local {
            next.iter_mut().for_each(|x| *x = 0);
            for idx in 0..size {
                let v = cur[idx];
                if v == 0 {
                    continue;
                }
                for &(lm, off, c) in terms {
                    if lm & !free[idx] == 0 {
                        let t = idx + off;
                        next[t] = fp.add(next[t] as u32, fp.mul(v as u32, c as u32)) as u8;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(cur[size - 1] as u32)
}

/// The Chevalley–Warning residue: [F]_p ≡ (-1)^(N+1) · cw_coefficient mod p.
pub fn cw_point_count_residue(factors: &[&MultilinearPoly], cfg: &OracleConfig) -> Result<u32, OracleError> {
    let c = cw_coefficient(factors, cfg)?;
    let n = factors.iter().fold(0, |acc, f| acc | f.vars).count_ones();
    let fp = check_prime(factors[0].p)?;
    Ok(if n % 2 == 1 { c } else { fp.neg(c) })
}

/// c2 through the three-edge formula with the point count replaced by the
/// Chevalley–Warning coefficient.
pub fn c2_cw(g: &Graph, p: u32, ijk: (usize, usize, usize), cfg: &OracleConfig) -> Result<u32, OracleError> {
    let fp = check_prime(p)?;
    let [a, b] = lemma3_factors(g, p, ijk)?;
    Ok(fp.neg(cw_point_count_residue(&[&a, &b], cfg)?))
}

/// A default triple for the three-edge formula: the first three edges at
/// the lowest-labeled vertex of degree 3, or the first three edges overall.
pub fn default_triple(g: &Graph) -> Option<(usize, usize, usize)> {
    let at = (0..g.num_vertices()).find(|&v| g.degree(v) == 3 && g.incident_edges(v).len() == 3);
    let es = match at {
        Some(v) => g.incident_edges(v),
        None => (0..g.num_edges()).collect(),
    };
    (es.len() >= 3).then(|| (es[0], es[1], es[2]))
}
