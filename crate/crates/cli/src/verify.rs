use c2_core::graph::Graph;
use c2_core::period::{analyze, detect_c2_period, guarded_c2_period, prefix_frequencies, GuardConfig, PeriodStatus, SearchBudget, SearchStrategy};
use c2_core::poly::{c2_direct, c2_lemma3, default_triple, OracleConfig};
use c2_core::transfer::{BuildConfig, Family, TransferSystem};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Tier {
    /// p = 2 only.
    Fast,
    /// Adds p = 3.
    Standard,
    /// Adds C13 at p = 5 and the long C23 p = 3 runs.
    Extended,
}

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Weighted seed sum of C13 at p = 3 over one period, from n = 9. The c2
/// values are its negatives.
const C13_P3_SEED_SUM: [u8; 36] = [0, 0, 0, 0, 0, 0, 1, 2, 2, 1, 2, 2, 2, 2, 1, 1, 1, 2, 0, 1, 0, 2, 0, 1, 1, 1, 2, 2, 2, 1, 2, 0, 1, 0, 1, 0];

/// C23 length-2 prefix counts of the c2 values, prefixes in lex order.
const C23_PREFIX_COUNTS: [u64; 6] = [4236, 4443, 4389, 5648, 5924, 5852];

struct Suite<'a> {
    build: &'a BuildConfig,
    oracle: &'a OracleConfig,
    out: Vec<Check>,
}

impl Suite<'_> {
    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.out.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    fn system(&mut self, f: Family, p: u32) -> Option<TransferSystem> {
        match TransferSystem::build(f, p, self.build) {
            Ok(s) => Some(s),
            Err(e) => {
                self.push(format!("{f} p={p} build"), false, e.to_string());
                None
            }
        }
    }

    fn states(&mut self, sys: &TransferSystem, want: usize) {
        self.push(format!("{} p={} states", sys.family(), sys.p()), sys.len() == want, format!("N={} (want {want})", sys.len()));
    }

    fn periodic(&mut self, sys: &TransferSystem, block: &[u8]) {
        let k = block.len() * 20;
        let got: Vec<u8> = sys.runner().take(k).map(|(_, c)| c as u8).collect();
        let ok = got.iter().enumerate().all(|(i, &v)| v == block[i % block.len()]);
        self.push(format!("{} p={} sequence", sys.family(), sys.p()), ok, format!("{} values against a block of {}", k, block.len()));
    }

    fn proven(&mut self, sys: &TransferSystem, c2: u64, vector: u64) {
        let name = format!("{} p={} periods", sys.family(), sys.p());
        match analyze(sys, SearchStrategy::Naive, &SearchBudget::default(), &GuardConfig::default(), 400) {
            Ok(r) => {
                let ok = r.c2_period == c2 && r.vector_period == Some(vector) && r.status == PeriodStatus::Proven;
                self.push(name, ok, format!("c2 {} vector {:?} {}", r.c2_period, r.vector_period, r.status));
            }
            Err(e) => self.push(name, false, e.to_string()),
        }
    }

    fn oracles(&mut self, sys: &TransferSystem) {
        let fam = sys.family();
        let mut bad = Vec::new();
        for (n, value) in sys.runner().take(4) {
            let g = Graph::circulant(n as usize, fam.jumps()).and_then(|g| g.decomplete(0)).map(|m| m.graph);
            let Ok(g) = g else {
                bad.push(format!("n={n}: graph"));
                continue;
            };
            let direct = c2_direct(&g, sys.p(), self.oracle).map(|c| c.value);
            let lemma = default_triple(&g).ok_or(()).and_then(|t| c2_lemma3(&g, sys.p(), t, self.oracle).map(|c| c.value).map_err(|_| ()));
            if direct != Ok(value) || lemma != Ok(value) {
                bad.push(format!("n={n}: engine {value} direct {direct:?} lemma3 {lemma:?}"));
            }
        }
        let first = fam.first_n();
        self.push(format!("{fam} p={} oracles n={}..{}", sys.p(), first, first + 3), bad.is_empty(), bad.join("; "));
    }
}

fn block_of(sys: &TransferSystem, observe: usize) -> Vec<u8> {
    let seq: Vec<u8> = sys.runner().take(observe).map(|(_, c)| c as u8).collect();
    let d = detect_c2_period(&seq).map(|c| c.period).unwrap_or(seq.len());
    seq[..d].to_vec()
}

pub fn run(tier: Tier, build: &BuildConfig, oracle: &OracleConfig) -> Vec<Check> {
    let mut s = Suite { build, oracle, out: Vec::new() };

    if let Some(sys) = s.system(Family::C13, 2) {
        s.states(&sys, 29);
        s.periodic(&sys, &[1, 0]);
        s.proven(&sys, 2, 4);
        s.oracles(&sys);
    }
    if let Some(sys) = s.system(Family::C23, 2) {
        s.states(&sys, 248);
        s.periodic(&sys, &[1, 1, 1, 0, 1, 0, 0]);
        s.proven(&sys, 7, 56);
        s.oracles(&sys);
    }
    if tier == Tier::Fast {
        return s.out;
    }

    if let Some(sys) = s.system(Family::C13, 3) {
        s.states(&sys, 546);
        let negated: Vec<u8> = C13_P3_SEED_SUM.iter().map(|&b| (3 - b) % 3).collect();
        s.periodic(&sys, &negated);
        let mut runner = sys.runner();
        let seed_sums: Vec<u8> = (0..36)
            .map(|_| {
                runner.next_value();
                sys.bracket(runner.vector()) as u8
            })
            .collect();
        s.push("c13 p=3 seed sum", seed_sums == C13_P3_SEED_SUM, "one block");
        s.proven(&sys, 36, 59040);
        s.oracles(&sys);
        if let Some(c13_p2) = s.system(Family::C13, 2) {
            let t = prefix_frequencies(&[(2, block_of(&c13_p2, 40)), (3, block_of(&sys, 216))], 2);
            match t {
                Ok(t) => {
                    let counts: Vec<u64> = t.counts.iter().map(|c| c.1).collect();
                    s.push("c13 length-2 prefixes", counts == [6; 6], format!("{counts:?}"));
                }
                Err(e) => s.push("c13 length-2 prefixes", false, e.to_string()),
            }
        }
    }
    if let Some(sys) = s.system(Family::C23, 3) {
        s.states(&sys, 30729);
        s.oracles(&sys);
        if tier == Tier::Extended {
            let seq: Vec<u8> = sys.runner().take(6 * 4356).map(|(_, c)| c as u8).collect();
            let raw = detect_c2_period(&seq);
            let guard = match guarded_c2_period(&seq, &GuardConfig::default()) {
                Ok(_) => "guard passes".to_string(),
                Err(e) => format!("guard: {e}"),
            };
            let ok = matches!(raw, Some(c) if c.period == 4356 && c.repeats >= 5);
            s.push("c23 p=3 c2 period", ok, format!("{raw:?}; {guard}"));
            if let Some(c23_p2) = s.system(Family::C23, 2) {
                let d = raw.map(|c| c.period).unwrap_or(seq.len());
                match prefix_frequencies(&[(2, block_of(&c23_p2, 70)), (3, seq[..d].to_vec())], 2) {
                    Ok(t) => {
                        let counts: Vec<u64> = t.counts.iter().map(|c| c.1).collect();
                        s.push("c23 length-2 prefixes", counts == C23_PREFIX_COUNTS, format!("{counts:?} over {}", t.ambient_period));
                    }
                    Err(e) => s.push("c23 length-2 prefixes", false, e.to_string()),
                }
            }
        }
    }
    if tier == Tier::Standard {
        return s.out;
    }

    if let Some(sys) = s.system(Family::C13, 5) {
        s.states(&sys, 82703);
        let seq: Vec<u8> = sys.runner().take(5 * 3720 + 10).map(|(_, c)| c as u8).collect();
        match guarded_c2_period(&seq, &GuardConfig::default()) {
            Ok(c) => s.push("c13 p=5 c2 period", c.period == 3720, format!("{} empirical, {} repeats", c.period, c.repeats)),
            Err(e) => s.push("c13 p=5 c2 period", false, e.to_string()),
        }
    }
    s.out
}
