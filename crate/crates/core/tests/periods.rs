use c2_core::period::*;
use c2_core::transfer::{BuildConfig, Family, TransferSystem};
use proptest::prelude::*;

/// Three states: state 0 feeds nothing, states 1 and 2 swap. Starting from
/// (1, 1, 0) the vector never returns to its start but cycles with period 2
/// after one step.
fn transient_system() -> TransferSystem {
    TransferSystem::from_parts(Family::C13, 2, vec![vec![], vec![(2, 1)], vec![(1, 1)]], vec![1, 1, 0], vec![(1, 1)]).unwrap()
}

#[test]
fn table_of_proven_periods() {
    let budget = SearchBudget::default();
    let guard = GuardConfig::default();
    for (fam, p, c2, vector) in [(Family::C13, 2, 2, 4), (Family::C23, 2, 7, 56), (Family::C13, 3, 36, 59040)] {
        let sys = TransferSystem::build(fam, p, &BuildConfig::default()).unwrap();
        let r = analyze(&sys, SearchStrategy::Naive, &budget, &guard, 400).unwrap();
        assert_eq!((r.c2_period, r.vector_period, r.status), (c2, Some(vector), PeriodStatus::Proven), "{fam} p={p}");
        assert_eq!(r.transient, 0);
        assert_eq!(r.counterexample, None);
    }
}

#[test]
fn blockwise_agrees_on_small_systems() {
    for (fam, p) in [(Family::C13, 2), (Family::C23, 2)] {
        let sys = TransferSystem::build(fam, p, &BuildConfig::default()).unwrap();
        let naive = analyze(&sys, SearchStrategy::Naive, &SearchBudget::default(), &GuardConfig::default(), 100).unwrap();
        let block = analyze(&sys, SearchStrategy::Blockwise, &SearchBudget::default(), &GuardConfig::default(), 100).unwrap();
        assert_eq!(naive, block);
    }
}

#[test]
fn transient_needs_blockwise() {
    let sys = transient_system();
    let seq: Vec<u8> = sys.runner().take(20).map(|(_, c)| c as u8).collect();
    assert_eq!(&seq[..4], &[0, 1, 0, 1]);
    let d = detect_c2_period(&seq).unwrap().period as u64;
    let budget = SearchBudget { max_steps: 1000, max_snapshots: 8 };

    let naive = detect_vector_period(&sys, SearchStrategy::Naive, d, &budget);
    assert_eq!(naive, VectorPeriod::LowerBound { steps: 1000 });
    let report = certify(&sys, d, naive, 10);
    assert_eq!(report.status, PeriodStatus::Empirical);
    assert_eq!(report.vector_lower_bound, Some(1000));

    let block = detect_vector_period(&sys, SearchStrategy::Blockwise, d, &budget);
    assert_eq!(block, VectorPeriod::Found { period: 2, transient: 1 });
    let report = certify(&sys, d, block, 10);
    assert_eq!(report.status, PeriodStatus::Proven);
    assert_eq!(report.transient, 1);
}

#[test]
fn snapshot_thinning_still_finds_long_cycles() {
    // A 37-cycle behind a 5-step tail, searched with c2 period 1 and only 4
    // snapshots.
    let n = 42u32;
    let mut rows: Vec<Vec<(u32, u8)>> = vec![vec![]; n as usize];
    for i in 0..4 {
        rows[i + 1].push((i as u32, 1));
    }
    rows[5].push((4, 1));
    for i in 5..n - 1 {
        rows[i as usize + 1].push((i, 1));
    }
    rows[5].push((n - 1, 1));
    let mut init = vec![0u8; n as usize];
    init[0] = 1;
    let sys = TransferSystem::from_parts(Family::C23, 2, rows, init, vec![(0, 1)]).unwrap();
    let found = detect_vector_period(&sys, SearchStrategy::Blockwise, 1, &SearchBudget { max_steps: 10_000, max_snapshots: 4 });
    assert_eq!(found, VectorPeriod::Found { period: 37, transient: 5 });
}

#[test]
fn uniform_prefixes_for_c13() {
    let block3: Vec<u8> = vec![0, 0, 0, 0, 0, 0, 2, 1, 1, 2, 1, 1, 1, 1, 2, 2, 2, 1, 0, 2, 0, 1, 0, 2, 2, 2, 1, 1, 1, 2, 1, 0, 2, 0, 2, 0];
    let t = prefix_frequencies(&[(2, vec![1, 0]), (3, block3)], 2).unwrap();
    assert_eq!(t.ambient_period, 36);
    assert_eq!(t.counts.iter().map(|c| c.1).collect::<Vec<_>>(), vec![6; 6]);
    assert_eq!(t.spread(), (6, 6, 6.0));
    let json = t.to_json();
    assert_eq!(json["ambient_period"], 36);
    assert_eq!(t.plot_csv().lines().count(), 7);
}

#[test]
fn prefix_errors() {
    assert_eq!(prefix_frequencies(&[], 1), Err(PeriodError::NoBlocks));
    assert!(matches!(prefix_frequencies(&[(3, vec![1]), (2, vec![1])], 2), Err(PeriodError::PrimeOrder(2, 3))));
    assert!(matches!(prefix_frequencies(&[(2, vec![1])], 2), Err(PeriodError::TooFewBlocks { .. })));
    assert!(matches!(prefix_frequencies(&[(2, vec![2])], 1), Err(PeriodError::BadValue { .. })));
}

fn block(p: u32) -> impl Strategy<Value = (u32, Vec<u8>)> {
    prop::collection::vec(0..p as u8, 1..40).prop_map(move |b| (p, b))
}

proptest! {
    #[test]
    fn counts_sum_to_ambient_period(b2 in block(2), b3 in block(3), b5 in block(5), b7 in block(7), length in 1usize..=4) {
        let t = prefix_frequencies(&[b2, b3, b5, b7], length).unwrap();
        prop_assert_eq!(t.total(), t.ambient_period);
        let slots: usize = [2, 3, 5, 7][..length].iter().product();
        prop_assert_eq!(t.counts.len(), slots);
        prop_assert!(t.counts.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn extending_by_a_block_keeps_the_period(b in prop::collection::vec(0u8..3, 1..30), reps in 1usize..5) {
        let seq: Vec<u8> = b.iter().copied().cycle().take(b.len() * reps).collect();
        let d = detect_c2_period(&seq).unwrap().period;
        let longer: Vec<u8> = (0..seq.len() + d).map(|i| seq[i % d]).collect();
        prop_assert_eq!(detect_c2_period(&longer).unwrap().period, d);
    }

    #[test]
    fn prefix_config_round_trips(b2 in block(2), b3 in block(3), length in 1usize..=2) {
        let cfg = PrefixConfig { length, blocks: vec![b2, b3] };
        prop_assert_eq!(PrefixConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
