//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Set `C2_ACCEPTANCE_TIER=standard` to skip the slow checks (C23 at p = 3
//! period and prefix tables, C13 at p = 5). The default runs everything.
//!
//! Some checks are expected to fail; they are listed in `KNOWN` with the
//! reason. The process exits non-zero only when an unexpected check fails
//! or a known failure starts passing.

use std::process::ExitCode;
use std::time::Instant;

use c2_core::forest::{assign_edges, dodgson_to_forests, ForestSum, ForestTerm};
use c2_core::graph::Graph;
use c2_core::partition::{set_partitions, VertexPartition};
use c2_core::period::{
    analyze, detect_c2_period, guarded_c2_period, longest_early_recurrence, prefix_frequencies, GuardConfig, GuardFailure, PeriodStatus,
    SearchBudget, SearchStrategy,
};
use c2_core::poly::{
    c2_direct, c2_lemma3, cw_point_count_residue, default_triple, dodgson, kirchhoff, point_count, point_count_product, MultilinearPoly,
    OracleConfig,
};
use c2_core::transfer::{BuildConfig, Checkpoint, Family, LocalRules, TransferError, TransferSystem};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

/// The 36-value block as printed for C13 at p = 3, from n = 9.
const C13_P3_PRINTED: [u8; 36] = [0, 0, 0, 0, 0, 0, 1, 2, 2, 1, 2, 2, 2, 2, 1, 1, 1, 2, 0, 1, 0, 2, 0, 1, 1, 1, 2, 2, 2, 1, 2, 0, 1, 0, 1, 0];

/// Printed length-2 prefix counts for C23, in the order
/// (0,0) (0,1) (0,2) (1,0) (1,1) (1,2).
const C23_PRINTED_PREFIXES: [u64; 6] = [4236, 4389, 4443, 5648, 5852, 5924];

/// Checks expected to fail, with the reason.
const KNOWN: &[(&str, &str)] = &[
    (
        "1c",
        "the engine's c2 is minus the weighted seed sum; independent point counts (n = 9..12 and n = 15) agree with the engine, and the printed block is the seed sum itself",
    ),
    ("3d", "the guard sees an initial segment of length 7 recur inside the first period; over F_3 this is expected by chance"),
    ("5b", "the printed counts are those of the negated sequence; with the engine's c2 the same six numbers land on other prefixes"),
];

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        let known = KNOWN.iter().find(|k| k.0 == id);
        let tag = if pass { "PASS" } else { "FAIL" };
        let note = match (pass, known) {
            (false, Some(k)) => format!(" [known deviation: {}]", k.1),
            (true, Some(_)) => " [listed as a known deviation but passed]".to_string(),
            _ => String::new(),
        };
        println!("{tag} {id} {name}: {detail}{note}");
        self.lines.push((id.to_string(), pass == known.is_none()));
    }
}

fn system(f: Family, p: u32) -> TransferSystem {
    TransferSystem::build(f, p, &BuildConfig::default()).expect("build")
}

fn values(sys: &TransferSystem, k: usize) -> Vec<u8> {
    sys.runner().take(k).map(|(_, c)| c as u8).collect()
}

fn periodic(block: &[u8], k: usize) -> Vec<u8> {
    block.iter().copied().cycle().take(k).collect()
}

fn sequences(r: &mut Report, c13_p3: &TransferSystem) {
    let s = values(&system(Family::C13, 2), 200);
    r.check("1a", "C13 p=2 is (1,0)* from n=9", s == periodic(&[1, 0], 200), format!("first 8 {:?}", &s[..8]));
    let s = values(&system(Family::C23, 2), 210);
    r.check("1b", "C23 p=2 is (1,1,1,0,1,0,0)* from n=7", s == periodic(&[1, 1, 1, 0, 1, 0, 0], 210), format!("first 8 {:?}", &s[..8]));

    let s = values(c13_p3, 216);
    let negated: Vec<u8> = C13_P3_PRINTED.iter().map(|&b| (3 - b) % 3).collect();
    r.check("1c", "C13 p=3 equals the printed 36-block", s == periodic(&C13_P3_PRINTED, 216), format!("first 12 {:?}", &s[..12]));
    r.check("1c'", "C13 p=3 equals the printed 36-block negated", s == periodic(&negated, 216), "six full blocks".into());
}

fn state_counts(r: &mut Report, extended: bool) {
    let mut cases = vec![(Family::C13, 2, 29), (Family::C13, 3, 546), (Family::C23, 2, 248)];
    if extended {
        cases.extend([(Family::C23, 3, 30729), (Family::C13, 5, 82703)]);
    }
    let got: Vec<usize> = cases.iter().map(|&(f, p, _)| system(f, p).len()).collect();
    let want: Vec<usize> = cases.iter().map(|c| c.2).collect();
    let id = if extended { "2" } else { "2 (standard tier)" };
    r.check(id, "state counts", got == want, format!("got {got:?}, want {want:?}"));
}

fn proven_periods(r: &mut Report, c13_p3: &TransferSystem) {
    let budget = SearchBudget::default();
    let guard = GuardConfig::default();
    let ids = ["3a", "3b", "3c"];
    let c13_p2 = system(Family::C13, 2);
    let c23_p2 = system(Family::C23, 2);
    let cases: [(&TransferSystem, u64, u64); 3] = [(&c13_p2, 2, 4), (c13_p3, 36, 59040), (&c23_p2, 7, 56)];
    for (id, (sys, c2, vector)) in ids.iter().zip(cases) {
        let report = analyze(sys, SearchStrategy::Naive, &budget, &guard, 400).expect("guard");
        let ok = report.c2_period == c2 && report.vector_period == Some(vector) && report.status == PeriodStatus::Proven;
        r.check(
            id,
            &format!("{} p={} periods ({c2},{vector}) proven", sys.family(), sys.p()),
            ok,
            format!("c2 {} vector {:?} {}", report.c2_period, report.vector_period, report.status),
        );
    }
}

/// The C23 p = 3 sequence over enough steps for six blocks of the expected
/// period.
fn c23_p3_values() -> Vec<u8> {
    values(&system(Family::C23, 3), 6 * 4356)
}

fn c23_p3_period(r: &mut Report, seq: &[u8]) {
    let raw = detect_c2_period(seq).expect("nonempty");
    r.check("3d'", "C23 p=3 c2 period 4356 with at least 5 blocks", raw.period == 4356 && raw.repeats >= 5, format!("period {} repeats {}", raw.period, raw.repeats));
    let guarded = guarded_c2_period(seq, &GuardConfig::default());
    let detail = match guarded {
        Ok(c) => format!("period {} repeats {}", c.period, c.repeats),
        Err(GuardFailure::EarlyRecurrence { .. }) | Err(GuardFailure::TooFewRepeats { .. }) => {
            let (len, at) = longest_early_recurrence(seq, raw.period);
            format!("rejected: {guarded:?}; initial segment of length {len} recurs at offset {at}")
        }
    };
    r.check("3d", "C23 p=3 c2 period 4356 empirical under the default guard", matches!(guarded, Ok(c) if c.period == 4356), detail);
}

fn c13_p5(r: &mut Report) {
    let t = Instant::now();
    let sys = system(Family::C13, 5);
    let observe = 5 * 3720 + 10;
    let mut runner = sys.runner();
    let start = sys.initial_vector().to_vec();
    let mut returned = None;
    let mut seq = Vec::with_capacity(observe);
    for k in 1..=observe {
        seq.push(runner.next_value().1 as u8);
        if returned.is_none() && runner.vector() == start.as_slice() {
            returned = Some(k);
        }
    }
    let guarded = guarded_c2_period(&seq, &GuardConfig::default());
    let ok = matches!(guarded, Ok(c) if c.period == 3720 && c.repeats >= 5) && returned.is_none();
    r.check(
        "3e",
        "C13 p=5 c2 period 3720 empirical",
        ok,
        format!("{guarded:?}; first return to the initial vector: {returned:?} (within {observe} steps); {:.0?}", t.elapsed()),
    );
}

fn oracle_triangle(r: &mut Report) {
    let cfg = OracleConfig::default();
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut checked = 0;
    for (fam, p) in [(Family::C13, 2), (Family::C13, 3), (Family::C23, 2), (Family::C23, 3)] {
        let sys = system(fam, p);
        for (n, value) in sys.runner().take(4) {
            let g = Graph::circulant(n as usize, fam.jumps()).unwrap().decomplete(0).unwrap().graph;
            let direct = c2_direct(&g, p, &cfg).map(|c| c.value);
            let lemma = c2_lemma3(&g, p, default_triple(&g).unwrap(), &cfg).map(|c| c.value);
            if direct != Ok(value) || lemma != Ok(value) {
                bad.push(format!("{fam} p={p} n={n}: engine {value} direct {direct:?} lemma {lemma:?}"));
            }
            checked += 1;
        }
    }
    r.check("4", "direct = three-edge formula = engine", bad.is_empty(), format!("{checked} cases, {:.0?} {bad:?}", t.elapsed()));
}

fn period_block(seq: &[u8]) -> Vec<u8> {
    let d = detect_c2_period(seq).expect("nonempty").period;
    seq[..d].to_vec()
}

fn prefixes(r: &mut Report, c13_p3: &TransferSystem, c23_p3: Option<&[u8]>) {
    let b2 = period_block(&values(&system(Family::C13, 2), 40));
    let b3 = period_block(&values(c13_p3, 216));
    let t = prefix_frequencies(&[(2, b2), (3, b3)], 2).unwrap();
    let counts: Vec<u64> = t.counts.iter().map(|c| c.1).collect();
    r.check("5a", "C13 length-2 prefixes uniform", t.ambient_period == 36 && counts == vec![6; 6], format!("{counts:?} over {}", t.ambient_period));

    let Some(seq) = c23_p3 else { return };
    let b2 = period_block(&values(&system(Family::C23, 2), 70));
    let b3 = period_block(seq);
    let t = prefix_frequencies(&[(2, b2.clone()), (3, b3.clone())], 2).unwrap();
    let counts: Vec<u64> = t.counts.iter().map(|c| c.1).collect();
    r.check("5b", "C23 length-2 prefix counts", counts == C23_PRINTED_PREFIXES, format!("{counts:?} over {}", t.ambient_period));

    let mut sorted = counts.clone();
    sorted.sort_unstable();
    r.check("5b'", "C23 length-2 counts as a multiset, sum 30492", sorted == C23_PRINTED_PREFIXES && t.total() == 30492, format!("{sorted:?} sum {}", t.total()));

    let neg: Vec<u8> = b3.iter().map(|&b| (3 - b) % 3).collect();
    let t = prefix_frequencies(&[(2, b2), (3, neg)], 2).unwrap();
    let counts: Vec<u64> = t.counts.iter().map(|c| c.1).collect();
    r.check("5b''", "C23 length-2 counts of the negated p=3 sequence", counts == C23_PRINTED_PREFIXES, format!("{counts:?}"));
}

/// Re-embed a polynomial on a deletion minor into the variables of g.
fn lift(poly: &MultilinearPoly, edge_map: &[Option<usize>], p: u32) -> MultilinearPoly {
    let back: Vec<usize> = (0..edge_map.len()).filter(|&e| edge_map[e].is_some()).collect();
    let vars = back.iter().fold(0u64, |acc, &e| acc | 1 << e);
    let terms = poly.terms().iter().map(|(&m, &c)| {
        let out = back.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).fold(0u64, |acc, (_, &e)| acc | 1 << e);
        (out, c as i64)
    });
    MultilinearPoly::from_terms(p, vars, terms)
}

fn connected_graphs(v: usize, max_edges: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..v).flat_map(|a| (a + 1..v).map(move |b| (a, b))).collect();
    (0u32..1 << pairs.len())
        .filter(|m| m.count_ones() as usize + 1 >= v && m.count_ones() as usize <= max_edges)
        .map(|mask| Graph::new(v, (0..pairs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| pairs[i]).collect()).unwrap())
        .filter(Graph::is_connected)
        .collect()
}

fn sample<S: Strategy>(runner: &mut TestRunner, s: &S) -> S::Value {
    s.new_tree(runner).expect("strategy").current()
}

fn multigraph(max: usize) -> impl Strategy<Value = Graph> {
    (3usize..=7, prop::collection::vec((0usize..7, 0usize..7), 2..=max)).prop_filter_map("connected", |(n, raw)| {
        let g = Graph::new(n, raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect()).ok()?;
        g.is_connected().then_some(g)
    })
}

fn poly_of_degree(p: u32, k: u32, d: u32) -> impl Strategy<Value = MultilinearPoly> {
    let masks: Vec<u64> = (0..1u64 << k).filter(|m| m.count_ones() <= d).collect();
    let top: Vec<u64> = masks.iter().copied().filter(|m| m.count_ones() == d).collect();
    (prop::sample::select(top), 1..p as i64, prop::collection::vec((prop::sample::select(masks), 0..p as i64), 0..10))
        .prop_map(move |(t, c, rest)| MultilinearPoly::from_terms(p, (1 << k) - 1, std::iter::once((t, c)).chain(rest.into_iter().filter(|r| r.0 != t))))
}

fn properties(r: &mut Report) {
    let cfg = OracleConfig::default();
    let mut runner = TestRunner::deterministic();

    let mut mismatches = 0;
    let mut graphs = 0;
    for v in 2..=6 {
        for g in connected_graphs(v, 7) {
            for p in [2, 3, 5] {
                if !dodgson(&g, &[], &[], &[], p).unwrap().eq_up_to_sign(&kirchhoff(&g, p).unwrap()) {
                    mismatches += 1;
                }
            }
            graphs += 1;
        }
    }
    r.check("6a", "det = Kirchhoff polynomial up to sign", mismatches == 0, format!("{graphs} connected graphs with at most 7 edges, p in 2,3,5"));

    let strat = multigraph(12);
    let mut bad = 0;
    for _ in 0..150 {
        let g = sample(&mut runner, &strat);
        for p in [2u64, 3] {
            if !point_count(&kirchhoff(&g, p as u32).unwrap(), &cfg).unwrap().is_multiple_of(p * p) {
                bad += 1;
            }
        }
    }
    r.check("6b", "[Psi]_p divisible by p^2", bad == 0, "150 multigraphs with at most 12 edges, p in 2,3".into());

    let pair = (prop::sample::select(vec![2u32, 3, 5]), 1u32..=6)
        .prop_flat_map(|(p, k)| (Just(p), Just(k), 0..=k))
        .prop_flat_map(|(p, k, a)| (poly_of_degree(p, k, a), poly_of_degree(p, k, k - a)));
    let mut bad = 0;
    for _ in 0..200 {
        let (f, g) = sample(&mut runner, &pair);
        let p = f.p() as u64;
        if cw_point_count_residue(&[&f, &g], &cfg).unwrap() as u64 != point_count_product(&[&f, &g], &cfg).unwrap() % p {
            bad += 1;
        }
    }
    r.check("6c", "Chevalley-Warning coefficient = point count mod p", bad == 0, "200 random polynomial pairs".into());

    let mut cases = 0;
    let mut bad = 0;
    for v in 3..=5 {
        for g in connected_graphs(v, 7).into_iter().step_by(17) {
            let m = g.num_edges();
            if m < 3 {
                continue;
            }
            for (i, j, k) in [(vec![0], vec![1], vec![]), (vec![0], vec![0], vec![2]), (vec![0], vec![m - 1], vec![1])] {
                for p in [2, 3, 5] {
                    let det = dodgson(&g, &i, &j, &k, p).unwrap();
                    let (minor, sum) = dodgson_to_forests(&g, &i, &j, &k, p).unwrap();
                    if !lift(&sum.expand(&minor.graph).unwrap(), &minor.edge_map, p).eq_up_to_sign(&det) {
                        bad += 1;
                    }
                    cases += 1;
                }
            }
        }
    }
    r.check("6d", "Dodgson polynomials as spanning forest sums", bad == 0, format!("{cases} cases"));

    let mut cases = 0;
    let mut bad = 0;
    for g in connected_graphs(5, 7).into_iter().step_by(23) {
        for v in 0..g.num_vertices() {
            let s = g.incident_edges(v);
            let mut ground: Vec<usize> = s.iter().flat_map(|&e| [g.edge(e).0, g.edge(e).1]).collect();
            ground.sort_unstable();
            ground.dedup();
            ground.truncate(5);
            for raw in set_partitions(&ground).into_iter().step_by(5) {
                let part = VertexPartition::new(raw).unwrap();
                if !reconstructs(&g, &part, &s, 3) {
                    bad += 1;
                }
                cases += 1;
            }
        }
    }
    r.check("6e", "edge assignment reconstructs the forest polynomial", bad == 0, format!("{cases} cases"));

    let sys = system(Family::C23, 3);
    let mut straight = sys.runner();
    let expect: Vec<_> = (0..120).map(|_| straight.next_value()).collect();
    let mut ok = true;
    for split in [0usize, 1, 37, 119] {
        let mut first = sys.runner();
        let mut got: Vec<_> = (0..split).map(|_| first.next_value()).collect();
        let mut second = sys.resume(Checkpoint::decode(&first.checkpoint().encode()).unwrap()).unwrap();
        got.extend((split..120).map(|_| second.next_value()));
        ok &= got == expect && second.checkpoint().encode() == straight.checkpoint().encode();
    }
    r.check("6f", "checkpoint and resume are bit-identical", ok, "C23 p=3, four split points".into());
}

fn reconstructs(g: &Graph, part: &VertexPartition, s: &[usize], p: u32) -> bool {
    let mut whole = ForestSum::new(p);
    whole.add(part.clone(), 1);
    let target = whole.expand(g).unwrap();
    let s_mask = s.iter().fold(0u64, |acc, &e| acc | 1 << e);
    let term = ForestTerm { partition: part.clone(), coeff: 1 };
    let mut acc: Vec<(u64, i64)> = Vec::new();
    let mut sub = s_mask;
    loop {
        let (minor, sum) = assign_edges(g, &term, s, sub, p).unwrap();
        let poly = lift(&sum.expand(&minor.graph).unwrap(), &minor.edge_map, p);
        acc.extend(poly.terms().iter().map(|(&m, &c)| (m | sub, c as i64)));
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & s_mask;
    }
    MultilinearPoly::from_terms(p, target.vars(), acc).same_terms(&target)
}

fn out_of_reach(r: &mut Report) {
    let mut details = Vec::new();
    let mut ok = true;
    for (fam, p) in [(Family::C13, 7), (Family::C23, 5)] {
        ok &= LocalRules::new(fam, p).is_ok();
        match TransferSystem::build(fam, p, &BuildConfig { max_states: 50_000, ..BuildConfig::default() }) {
            Err(TransferError::TooManyStates { limit, processed }) => details.push(format!("{fam} p={p}: cap {limit} hit after {processed} rows")),
            other => {
                ok = false;
                details.push(format!("{fam} p={p}: {:?}", other.map(|s| s.len())));
            }
        }
    }
    r.check("7a", "C13 p=7 and C23 p=5 accepted and stop cleanly at the state cap", ok, details.join("; "));

    let ck = Checkpoint::new(Family::C13, 7, vec![1, 6, 0], vec![3; 9]);
    let bytes = ck.encode();
    let back = Checkpoint::decode(&bytes);
    r.check("7b", "C13 p=7 checkpoint encodes and decodes", back.as_ref().map(|c| c.encode() == bytes).unwrap_or(false), format!("{} bytes", bytes.len()));

    let mut runner = TestRunner::deterministic();
    let mut ok = true;
    for _ in 0..50 {
        let blocks = sample(
            &mut runner,
            &(
                prop::collection::vec(0u8..2, 1..8),
                prop::collection::vec(0u8..3, 1..40),
                prop::collection::vec(0u8..5, 1..60),
                prop::collection::vec(0u8..7, 1..60),
            ),
        );
        let blocks = vec![(2, blocks.0), (3, blocks.1), (5, blocks.2), (7, blocks.3)];
        for length in [3, 4] {
            let t = prefix_frequencies(&blocks, length).unwrap();
            ok &= t.total() == t.ambient_period;
        }
    }
    r.check("7c", "length-3 and length-4 prefix counts sum to the ambient period", ok, "50 synthetic block sets".into());
}

fn main() -> ExitCode {
    let extended = std::env::var("C2_ACCEPTANCE_TIER").map(|t| t != "standard").unwrap_or(true);
    let mut r = Report { lines: Vec::new() };
    let c13_p3 = system(Family::C13, 3);

    sequences(&mut r, &c13_p3);
    state_counts(&mut r, extended);
    proven_periods(&mut r, &c13_p3);
    let c23 = extended.then(c23_p3_values);
    if let Some(seq) = &c23 {
        c23_p3_period(&mut r, seq);
    }
    if extended {
        c13_p5(&mut r);
    }
    oracle_triangle(&mut r);
    prefixes(&mut r, &c13_p3, c23.as_deref());
    properties(&mut r);
    out_of_reach(&mut r);

    let unexpected: Vec<&str> = r.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    if unexpected.is_empty() {
        println!("acceptance: {} checks, all as expected", r.lines.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected results for {unexpected:?}");
        ExitCode::FAILURE
    }
}
