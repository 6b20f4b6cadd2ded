//! Periods of c2 sequences and of the underlying state vectors, and
//! frequency tables of c2 prefixes across primes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use std::hash::Hasher;
use thiserror::Error;

use crate::field::is_prime;
use crate::transfer::TransferSystem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PeriodError {
    #[error("empty sequence")]
    Empty,
    #[error("no prefix blocks given")]
    NoBlocks,
    #[error("prefix length {length} needs {length} blocks, got {blocks}")]
    TooFewBlocks { length: usize, blocks: usize },
    #[error("block for p = {p} has value {value} >= p")]
    BadValue { p: u32, value: u8 },
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("primes must be strictly increasing, got {0} after {1}")]
    PrimeOrder(u32, u32),
    #[error("ambient period exceeds {0}")]
    PeriodTooLong(u64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Thresholds for accepting a period seen only empirically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardConfig {
    /// Full blocks that must have been observed.
    pub min_repeats: usize,
    /// Longest initial segment allowed to recur before the period.
    pub max_early_segment: usize,
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig { min_repeats: 5, max_early_segment: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct C2Period {
    pub period: usize,
    /// Complete blocks in the observed sequence.
    pub repeats: usize,
}

/// Smallest d such that the sequence is d-periodic from its first entry.
pub fn detect_c2_period(seq: &[u8]) -> Option<C2Period> {
    if seq.is_empty() {
        return None;
    }
    // Smallest period = len - longest proper border (prefix function).
    let mut pi = vec![0usize; seq.len()];
    for i in 1..seq.len() {
        let mut k = pi[i - 1];
        while k > 0 && seq[i] != seq[k] {
            k = pi[k - 1];
        }
        if seq[i] == seq[k] {
            k += 1;
        }
        pi[i] = k;
    }
    let period = seq.len() - pi[seq.len() - 1];
    Some(C2Period { period, repeats: seq.len() / period })
}

/// Longest initial segment that recurs at an offset 0 < j < d.
pub fn longest_early_recurrence(seq: &[u8], d: usize) -> (usize, usize) {
    // Z-function gives the common prefix length at every offset.
    let n = seq.len();
    let mut z = vec![0usize; n];
    let (mut l, mut r) = (0, 0);
    for i in 1..n {
        if i < r {
            z[i] = (r - i).min(z[i - l]);
        }
        while i + z[i] < n && seq[z[i]] == seq[i + z[i]] {
            z[i] += 1;
        }
        if i + z[i] > r {
            l = i;
            r = i + z[i];
        }
    }
    (1..d.min(n)).map(|j| (z[j], j)).max().unwrap_or((0, 0))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuardFailure {
    #[error("only {repeats} repeats of the block, need {needed}")]
    TooFewRepeats { repeats: usize, needed: usize },
    #[error("initial segment of length {length} recurs at offset {offset}")]
    EarlyRecurrence { length: usize, offset: usize },
}

/// The c2 period with the empirical guard applied.
pub fn guarded_c2_period(seq: &[u8], guard: &GuardConfig) -> Result<C2Period, GuardFailure> {
    let found = detect_c2_period(seq).ok_or(GuardFailure::TooFewRepeats { repeats: 0, needed: guard.min_repeats })?;
    if found.repeats < guard.min_repeats {
        return Err(GuardFailure::TooFewRepeats { repeats: found.repeats, needed: guard.min_repeats });
    }
    let (length, offset) = longest_early_recurrence(seq, found.period);
    if length > guard.max_early_segment {
        return Err(GuardFailure::EarlyRecurrence { length, offset });
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    /// Compare each vector with the initial one.
    Naive,
    /// Compare vectors at multiples of the c2 period with stored snapshots.
    Blockwise,
}

impl std::str::FromStr for SearchStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(SearchStrategy::Naive),
            "blockwise" => Ok(SearchStrategy::Blockwise),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_steps: u64,
    /// Snapshots kept by the blockwise search before thinning.
    pub max_snapshots: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_steps: 10_000_000, max_snapshots: 1 << 16 }
    }
}

/// Outcome of a vector period search. Steps count from the minimal chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorPeriod {
    /// v_{transient + period} = v_transient, both minimal.
    Found { period: u64, transient: u64 },
    /// No recurrence among the vectors compared within the budget. For the
    /// naive search this certifies v_n != v_0 for 1 <= n <= steps.
    LowerBound { steps: u64 },
}

fn vector_hash(v: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(v);
    h.finish()
}

fn advance(sys: &TransferSystem, v: &mut Vec<u8>, scratch: &mut Vec<u8>, steps: u64) {
    for _ in 0..steps {
        sys.step(v, scratch);
        std::mem::swap(v, scratch);
    }
}

/// Given v_i = v_j (i < j), find the exact cycle length and the shortest
/// transient by re-iterating.
fn refine(sys: &TransferSystem, i: u64, j: u64) -> VectorPeriod {
    let mut scratch = vec![0; sys.len()];
    let mut v = sys.initial_vector().to_vec();
    advance(sys, &mut v, &mut scratch, i);
    let anchor = v.clone();
    let mut period = j - i;
    for k in 1..j - i {
        sys.step(&v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
        if v == anchor {
            period = k;
            break;
        }
    }
    let mut slow = sys.initial_vector().to_vec();
    let mut fast = slow.clone();
    advance(sys, &mut fast, &mut scratch, period);
    let mut transient = 0;
    while slow != fast && transient < i {
        advance(sys, &mut slow, &mut scratch, 1);
        advance(sys, &mut fast, &mut scratch, 1);
        transient += 1;
    }
    VectorPeriod::Found { period, transient }
}

pub fn detect_vector_period(sys: &TransferSystem, strategy: SearchStrategy, c2_period: u64, budget: &SearchBudget) -> VectorPeriod {
    let mut v = sys.initial_vector().to_vec();
    let mut scratch = vec![0; sys.len()];
    match strategy {
        SearchStrategy::Naive => {
            let start = sys.initial_vector();
            for n in 1..=budget.max_steps {
                sys.step(&v, &mut scratch);
                std::mem::swap(&mut v, &mut scratch);
                if v == start {
                    return VectorPeriod::Found { period: n, transient: 0 };
                }
            }
            VectorPeriod::LowerBound { steps: budget.max_steps }
        }
        SearchStrategy::Blockwise => {
            let d = c2_period.max(1);
            let mut stride = 1u64;
            let mut seen: HashMap<u64, Vec<u64>> = HashMap::new();
            let mut stored = 0usize;
            seen.entry(vector_hash(&v)).or_default().push(0);
            stored += 1;
            let mut n = 0u64;
            // Every block boundary is compared; only every stride-th one is
            // stored. A cycle entered before a stored position i is then
            // caught at i + lcm(cycle, d) however far the stride has grown.
            while n + d <= budget.max_steps {
                advance(sys, &mut v, &mut scratch, d);
                n += d;
                let h = vector_hash(&v);
                if let Some(earlier) = seen.get(&h) {
                    // Hashes can collide; confirm by re-iteration.
                    for &i in earlier {
                        let mut w = sys.initial_vector().to_vec();
                        advance(sys, &mut w, &mut scratch, i);
                        if w == v {
                            return refine(sys, i, n);
                        }
                    }
                }
                if !(n / d).is_multiple_of(stride) {
                    continue;
                }
                seen.entry(h).or_default().push(n);
                stored += 1;
                if stored > budget.max_snapshots {
                    stride *= 2;
                    for list in seen.values_mut() {
                        list.retain(|&i| (i / d).is_multiple_of(stride));
                    }
                    seen.retain(|_, l| !l.is_empty());
                    stored = seen.values().map(Vec::len).sum();
                }
            }
            VectorPeriod::LowerBound { steps: n }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodStatus {
    Proven,
    Empirical,
}

impl fmt::Display for PeriodStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodStatus::Proven => "proven",
            PeriodStatus::Empirical => "empirical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub c2_period: u64,
    pub status: PeriodStatus,
    pub repeats: u64,
    pub vector_period: Option<u64>,
    /// Steps before the state vector becomes periodic.
    pub transient: u64,
    /// Set when the search ran out of budget.
    pub vector_lower_bound: Option<u64>,
    /// First c2 index breaking the block structure, if any.
    pub counterexample: Option<u64>,
}

/// Check a vector period against the c2 blocks and build the report.
///
/// The period is re-verified by iterating; within one vector period after
/// the transient, the c2 values must split into identical blocks of
/// length `c2_period`.
pub fn certify(sys: &TransferSystem, c2_period: u64, found: VectorPeriod, repeats: u64) -> PeriodReport {
    let mut report = PeriodReport {
        c2_period,
        status: PeriodStatus::Empirical,
        repeats,
        vector_period: None,
        transient: 0,
        vector_lower_bound: None,
        counterexample: None,
    };
    let (period, transient) = match found {
        VectorPeriod::Found { period, transient } => (period, transient),
        VectorPeriod::LowerBound { steps } => {
            report.vector_lower_bound = Some(steps);
            return report;
        }
    };
    report.vector_period = Some(period);
    report.transient = transient;
    let mut runner = sys.runner();
    let mut start = Vec::new();
    for _ in 0..transient {
        runner.next_value();
    }
    if transient == 0 {
        start = sys.initial_vector().to_vec();
    } else {
        start.extend_from_slice(runner.vector());
    }
    // c2 index k belongs to step k + 1.
    let mut values = Vec::with_capacity(period as usize);
    for _ in 0..period {
        values.push(runner.next_value().1 as u8);
    }
    if runner.vector() != start.as_slice() {
        report.counterexample = Some(transient + period);
        return report;
    }
    if c2_period == 0 || period % c2_period != 0 {
        report.counterexample = Some(transient);
        return report;
    }
    let d = c2_period as usize;
    if let Some(k) = (d..values.len()).find(|&k| values[k] != values[k - d]) {
        report.counterexample = Some(transient + k as u64);
        return report;
    }
    // A nonzero transient shifts the blocks; they must also agree with the
    // values before the cycle.
    report.status = PeriodStatus::Proven;
    report.repeats = report.repeats.max(period / c2_period);
    report
}

/// Full pipeline: c2 period from a guarded run, then vector period search
/// and certification.
pub fn analyze(sys: &TransferSystem, strategy: SearchStrategy, budget: &SearchBudget, guard: &GuardConfig, observe: usize) -> Result<PeriodReport, GuardFailure> {
    let seq: Vec<u8> = sys.runner().take(observe).map(|(_, c)| c as u8).collect();
    let c2 = guarded_c2_period(&seq, guard)?;
    let found = detect_vector_period(sys, strategy, c2.period as u64, budget);
    Ok(certify(sys, c2.period as u64, found, c2.repeats as u64))
}

/// Counts of each tuple of leading c2 values over one common period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixTable {
    pub length: usize,
    pub primes: Vec<u32>,
    pub ambient_period: u64,
    /// Every possible prefix in lexicographic order, with its count.
    pub counts: Vec<(Vec<u8>, u64)>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Longest ambient period tallied.
pub const MAX_AMBIENT: u64 = 1 << 36;

pub fn prefix_frequencies(blocks: &[(u32, Vec<u8>)], length: usize) -> Result<PrefixTable, PeriodError> {
    if blocks.is_empty() || length == 0 {
        return Err(PeriodError::NoBlocks);
    }
    if blocks.len() < length {
        return Err(PeriodError::TooFewBlocks { length, blocks: blocks.len() });
    }
    let used = &blocks[..length];
    let mut prev = 0;
    let mut ambient = 1u64;
    for (p, block) in used {
        if !is_prime(*p) {
            return Err(PeriodError::NotPrime(*p));
        }
        if *p <= prev {
            return Err(PeriodError::PrimeOrder(*p, prev));
        }
        prev = *p;
        if block.is_empty() {
            return Err(PeriodError::Empty);
        }
        if let Some(&value) = block.iter().find(|&&v| v as u32 >= *p) {
            return Err(PeriodError::BadValue { p: *p, value });
        }
        let len = block.len() as u64;
        ambient = (ambient / gcd(ambient, len)).checked_mul(len).filter(|&a| a <= MAX_AMBIENT).ok_or(PeriodError::PeriodTooLong(MAX_AMBIENT))?;
    }
    let radix: Vec<u64> = used.iter().map(|(p, _)| *p as u64).collect();
    let slots: u64 = radix.iter().product();
    if slots > MAX_AMBIENT {
        return Err(PeriodError::PeriodTooLong(MAX_AMBIENT));
    }
    let mut tally = vec![0u64; slots as usize];
    for n in 0..ambient {
        let mut idx = 0u64;
        for (k, (_, block)) in used.iter().enumerate() {
            idx = idx * radix[k] + block[(n % block.len() as u64) as usize] as u64;
        }
        tally[idx as usize] += 1;
    }
    let counts = tally
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut digits = vec![0u8; length];
            let mut rest = i as u64;
            for k in (0..length).rev() {
                digits[k] = (rest % radix[k]) as u8;
                rest /= radix[k];
            }
            (digits, c)
        })
        .collect();
    Ok(PrefixTable { length, primes: used.iter().map(|(p, _)| *p).collect(), ambient_period: ambient, counts })
}

fn prefix_label(digits: &[u8]) -> String {
    let inner: Vec<String> = digits.iter().map(u8::to_string).collect();
    format!("({})", inner.join(","))
}

impl PrefixTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.1).sum()
    }

    /// (min, max, mean) over prefixes that occur.
    pub fn spread(&self) -> (u64, u64, f64) {
        let present: Vec<u64> = self.counts.iter().map(|c| c.1).filter(|&c| c > 0).collect();
        let min = present.iter().copied().min().unwrap_or(0);
        let max = present.iter().copied().max().unwrap_or(0);
        let mean = if present.is_empty() { 0.0 } else { self.total() as f64 / present.len() as f64 };
        (min, max, mean)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("prefix,count\n");
        for (d, c) in &self.counts {
            s.push_str(&format!("\"{}\",{c}\n", prefix_label(d)));
        }
        s
    }

    /// Two columns: lexicographic index of the prefix and its count.
    pub fn plot_csv(&self) -> String {
        let mut s = String::from("index,count\n");
        for (i, (_, c)) in self.counts.iter().enumerate() {
            s.push_str(&format!("{i},{c}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (min, max, mean) = self.spread();
        let counts: BTreeMap<String, u64> = self.counts.iter().map(|(d, c)| (prefix_label(d), *c)).collect();
        serde_json::json!({
            "length": self.length,
            "primes": self.primes,
            "ambient_period": self.ambient_period,
            "counts": counts,
            "min": min,
            "max": max,
            "mean": mean,
        })
    }
}

/// Per-prime c2 blocks and a prefix length, read from text:
///
/// ```text
/// # comments and blank lines are ignored
/// length 2
/// block 2: 1 0
/// block 3: 0 0 0 0 0 0 1 2 2 1 ...
/// ```
///
/// Values may be separated by spaces or commas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixConfig {
    pub length: usize,
    pub blocks: Vec<(u32, Vec<u8>)>,
}

/// Longest block accepted by the parser.
pub const MAX_BLOCK: usize = 1 << 28;

impl PrefixConfig {
    pub fn parse(text: &str) -> Result<Self, PeriodError> {
        let mut length = None;
        let mut blocks: Vec<(u32, Vec<u8>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: &str| PeriodError::Parse { line: line_no, msg: msg.to_string() };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("length") {
                if length.is_some() {
                    return Err(err("length given twice"));
                }
                let l: usize = rest.trim().parse().map_err(|_| err("bad length"))?;
                if l == 0 {
                    return Err(err("length must be positive"));
                }
                length = Some(l);
            } else if let Some(rest) = line.strip_prefix("block") {
                let (p, values) = rest.split_once(':').ok_or_else(|| err("expected 'block <p>: <values>'"))?;
                let p: u32 = p.trim().parse().map_err(|_| err("bad prime"))?;
                if !is_prime(p) || p > 255 {
                    return Err(err("block prime must be a prime below 256"));
                }
                if blocks.iter().any(|b| b.0 == p) {
                    return Err(err("prime repeated"));
                }
                let mut block = Vec::new();
                for tok in values.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                    let v: u8 = tok.parse().map_err(|_| err("bad value"))?;
                    if v as u32 >= p {
                        return Err(err("value not reduced mod p"));
                    }
                    if block.len() == MAX_BLOCK {
                        return Err(err("block too long"));
                    }
                    block.push(v);
                }
                if block.is_empty() {
                    return Err(err("empty block"));
                }
                blocks.push((p, block));
            } else {
                return Err(err("expected 'length' or 'block'"));
            }
        }
        blocks.sort_by_key(|b| b.0);
        let length = length.unwrap_or(blocks.len());
        if blocks.is_empty() {
            return Err(PeriodError::NoBlocks);
        }
        if blocks.len() < length {
            return Err(PeriodError::TooFewBlocks { length, blocks: blocks.len() });
        }
        Ok(PrefixConfig { length, blocks })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("length {}\n", self.length);
        for (p, b) in &self.blocks {
            let vals: Vec<String> = b.iter().map(u8::to_string).collect();
            s.push_str(&format!("block {p}: {}\n", vals.join(" ")));
        }
        s
    }
}
