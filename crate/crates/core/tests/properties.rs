mod common;

use common::*;
use kfree_core::search::{branch_and_bound, greedy_reference, run_search, Mode, RunOptions, SearchConfig};
use kfree_core::{
    harmonic_sum_shifted, is_kfree_mod, longest_ap, quick_estimate, read_rows, FiniteSet, KempnerSpec, PrecisionConfig,
    ResidueSet, ResultRow, SearchState,
};
use proptest::prelude::*;

fn ok(result: Result<(), String>) {
    if let Err(e) = result {
        panic!("{e}");
    }
}

#[test]
fn window_matches_brute_scan() {
    ok(suite_window(10_000));
}

#[test]
fn certificate_is_sound() {
    ok(suite_certificate(500));
}

#[test]
fn small_sets_embed_in_large_bases() {
    ok(suite_embedding(1000));
}

#[test]
fn shift_identity_holds() {
    ok(suite_shift_identity(100));
}

#[test]
fn engine_brackets_partial_sums() {
    ok(suite_engine_vs_direct(100));
}

#[test]
fn greedy_sets_are_kempner_sets() {
    ok(check_greedy_kempner(2000));
}

#[test]
fn greedy_four_free_partial_sum() {
    // 30-digit evaluation of the same 10000 terms: 4.19110900404826849...
    let sum = g4_partial_sum(10_000).unwrap();
    assert!((sum - 4.191_109_004_048_268).abs() < 1e-12, "{sum}");
    assert_eq!(format!("{sum:.5}"), "4.19111");
}

#[test]
fn brute_oracles_agree_on_examples() {
    assert!(!brute_kfree_mod(6, 3, &[1, 3, 5]));
    assert!(brute_kfree_mod(11, 4, &[0, 1, 2, 4, 5, 7]));
    assert_eq!(brute_longest_ap(&[1, 4, 6, 7, 10, 13]), 5);
    assert_eq!(naive_greedy(3, 8), vec![1, 2, 4, 5, 10, 11, 13, 14]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn longest_ap_matches_pair_scan(set in proptest::collection::btree_set(0u64..200, 0..40)) {
        let elements: Vec<u64> = set.into_iter().collect();
        let (len, witness) = longest_ap(&FiniteSet::new(elements.iter().copied()));
        prop_assert_eq!(len, brute_longest_ap(&elements));
        if let Some((start, step)) = witness {
            for j in 0..len as u64 {
                prop_assert!(elements.contains(&(start + j * step)));
            }
        }
    }

    #[test]
    fn subsets_stay_free((b, digits) in (3u32..=24).prop_flat_map(|b| (Just(b), subset_of(b))), k in 3u32..=5, drop in any::<prop::sample::Index>()) {
        let set = ResidueSet::new(b, digits.iter().copied()).unwrap();
        if is_kfree_mod(&set, k).unwrap() && !digits.is_empty() {
            let removed = digits[drop.index(digits.len())];
            let smaller = ResidueSet::new(b, digits.iter().copied().filter(|&d| d != removed)).unwrap();
            prop_assert!(is_kfree_mod(&smaller, k).unwrap());
        }
    }

    #[test]
    fn freeness_is_monotone_in_k((b, digits) in (3u32..=24).prop_flat_map(|b| (Just(b), subset_of(b))), k in 3u32..=6) {
        let set = ResidueSet::new(b, digits).unwrap();
        if is_kfree_mod(&set, k).unwrap() {
            prop_assert!(is_kfree_mod(&set, k + 1).unwrap());
        }
    }

    #[test]
    fn extension_matches_fresh_state(b in 4u32..=24, k in 3u32..=5, order in Just((1u32..23).collect::<Vec<_>>()).prop_shuffle(), steps in 1usize..6) {
        let mut state = SearchState::rooted_at_zero(b, k).unwrap();
        let mut taken = 0;
        for &t in &order {
            if taken == steps {
                break;
            }
            if !state.candidates().contains(&t) {
                continue;
            }
            state = state.extend(t).unwrap();
            taken += 1;
            let fresh = SearchState::new(state.digits().clone(), k).unwrap();
            prop_assert_eq!(state.candidates(), fresh.candidates());
            let top = state.digits().max_digit().unwrap();
            let expected: Vec<u32> = (top + 1..b - 1)
                .filter(|&u| brute_kfree_mod(b, k, &[state.digits().members(), &[u]].concat()))
                .collect();
            prop_assert_eq!(state.candidates(), expected.as_slice());
        }
    }

    #[test]
    fn membership_matches_enumeration((b, digits) in (2u32..=12).prop_flat_map(|b| (Just(b), subset_of(b))).prop_filter("proper", |(b, d)| !d.is_empty() && d.len() < *b as usize), shift in 0u64..5, probes in proptest::collection::vec(0u64..1_000_000, 50)) {
        let spec = KempnerSpec::new(ResidueSet::new(b, digits.iter().copied()).unwrap(), shift).unwrap();
        let listed = spec.enumerate_upto(1_000_000);
        for x in probes {
            let by_digits = x >= shift && digits_all_in(x - shift, b as u64, &digits);
            prop_assert_eq!(spec.contains(x), by_digits);
            prop_assert_eq!(listed.contains(x), by_digits);
        }
        prop_assert!(listed.elements().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn kempner_sets_are_self_similar((b, digits) in (2u32..=12).prop_flat_map(|b| (Just(b), subset_of(b))).prop_filter("proper", |(b, d)| !d.is_empty() && d.len() < *b as usize), pick in any::<prop::sample::Index>()) {
        let spec = KempnerSpec::new(ResidueSet::new(b, digits.iter().copied()).unwrap(), 0).unwrap();
        let members: Vec<u64> = spec.iter().take(200).take_while(|&x| x < 1 << 40).collect();
        let x = members[pick.index(members.len())];
        for &d in &digits {
            prop_assert!(spec.contains(b as u64 * x + d as u64));
        }
    }

    #[test]
    fn estimate_follows_closed_form((b, digits) in (3u32..=40).prop_flat_map(|b| (Just(b), subset_of(b))).prop_filter("proper", |(b, d)| d.len() < *b as usize)) {
        let set = ResidueSet::new(b, digits.iter().copied()).unwrap();
        let head: f64 = digits.iter().map(|&d| 1.0 / (d as f64 + 1.0)).sum();
        let expected = head / (1.0 - digits.len() as f64 / b as f64);
        let got = quick_estimate(&set);
        prop_assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
        prop_assert_eq!(got.to_bits(), quick_estimate(&set).to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn refined_runs_stay_inside_earlier_intervals((b, digits) in (3u32..=12).prop_flat_map(|b| (Just(b), subset_of(b))).prop_filter("proper", |(b, d)| !d.is_empty() && d.len() < *b as usize), shift in 0u64..3) {
        let set = ResidueSet::new(b, digits).unwrap();
        let coarse = harmonic_sum_shifted(&set, shift, &PrecisionConfig { series_order: 12, ..PrecisionConfig::with_target(1e-6) }).unwrap();
        let fine = harmonic_sum_shifted(&set, shift, &PrecisionConfig { series_order: 30, direct_depth: 3, ..PrecisionConfig::with_target(1e-10) }).unwrap();
        prop_assert!(coarse.contains(fine.value) || (fine.value - coarse.value).abs() <= coarse.error_bound + fine.error_bound,
            "{:?} vs {:?}", coarse, fine);
        prop_assert!(fine.error_bound <= 1e-10);
    }

    #[test]
    fn adding_a_digit_raises_the_sum((b, digits) in (3u32..=12).prop_flat_map(|b| (Just(b), subset_of(b))).prop_filter("room for one more", |(b, d)| !d.is_empty() && d.len() + 1 < *b as usize), pick in any::<prop::sample::Index>()) {
        let cfg = PrecisionConfig::with_target(1e-8);
        let missing: Vec<u32> = (0..b).filter(|d| !digits.contains(d)).collect();
        let extra = missing[pick.index(missing.len())];
        let small = harmonic_sum_shifted(&ResidueSet::new(b, digits.iter().copied()).unwrap(), 1, &cfg).unwrap();
        let big = harmonic_sum_shifted(&ResidueSet::new(b, digits.iter().copied().chain([extra])).unwrap(), 1, &cfg).unwrap();
        prop_assert!(big.lower() > small.upper(), "{:?} vs {:?}", small, big);
    }

    #[test]
    fn result_rows_round_trip(k in 3u32..10, b in 3u32..200, digits in proptest::collection::btree_set(0u32..200, 1..20), estimate in 0.0f64..100.0, hsum in proptest::option::of(0.0f64..100.0), density in 0.0f64..1.0) {
        let row = ResultRow {
            schema_version: 1,
            k,
            b,
            digits: digits.into_iter().collect(),
            estimate,
            hsum,
            hsum_error: hsum.map(|_| 1e-9),
            density,
            mode: "caps=0,1,2".into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
        };
        let mut buf = Vec::new();
        row.write_line(&mut buf).unwrap();
        prop_assert_eq!(read_rows(&buf[..]).unwrap(), vec![row]);
    }
}

/// Every maximal subset of `[0, b-2]` containing 0 that is k-free mod b.
fn maximal_kfree_subsets(b: u32, k: u32) -> Vec<Vec<u32>> {
    let free_digits: Vec<u32> = (1..b - 1).collect();
    let mut out = Vec::new();
    for mask in 0u64..1 << free_digits.len() {
        let set: Vec<u32> = std::iter::once(0)
            .chain(
                free_digits
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &d)| d),
            )
            .collect();
        if !brute_kfree_mod(b, k, &set) {
            continue;
        }
        let maximal = (0..b - 1).filter(|d| !set.contains(d)).all(|d| {
            let mut bigger = set.clone();
            bigger.push(d);
            !brute_kfree_mod(b, k, &bigger)
        });
        if maximal {
            out.push(set);
        }
    }
    out.sort();
    out
}

fn digit_lists(cfg: &SearchConfig) -> Vec<Vec<u32>> {
    branch_and_bound(cfg)
        .unwrap()
        .into_iter()
        .map(|r| r.digits.members().to_vec())
        .collect()
}

#[test]
fn unpruned_search_finds_every_maximal_set() {
    for b in 3..=12 {
        let found = digit_lists(&SearchConfig::new(4, b..=b, f64::NEG_INFINITY));
        assert_eq!(found, maximal_kfree_subsets(b, 4), "b={b}");
    }
    let found = digit_lists(&SearchConfig::new(3, 10..=10, f64::NEG_INFINITY));
    assert_eq!(found, maximal_kfree_subsets(10, 3));
}

#[test]
fn pruning_follows_the_estimate() {
    for threshold in [3.0, 3.5, 4.0, 4.5, 5.0] {
        let all = branch_and_bound(&SearchConfig::new(4, 5..=14, f64::NEG_INFINITY)).unwrap();
        let kept = branch_and_bound(&SearchConfig::new(4, 5..=14, threshold)).unwrap();
        assert!(kept.iter().all(|r| r.estimate >= threshold));
        let expected: Vec<_> = all.into_iter().filter(|r| r.estimate >= threshold).collect();
        assert_eq!(kept, expected, "threshold {threshold}");
    }
}

#[test]
fn root_branch_is_a_slice_of_full_search() {
    for b in 6..=12 {
        let full = digit_lists(&SearchConfig::new(4, b..=b, f64::NEG_INFINITY));
        let mut prefixes: Vec<Vec<u32>> = full.iter().map(|s| s[..2.min(s.len())].to_vec()).collect();
        prefixes.extend(full.iter().filter(|s| s.len() > 3).map(|s| s[..3].to_vec()));
        prefixes.push(vec![0, 1, 2, 3]);
        prefixes.push(vec![0, 2]);
        prefixes.sort();
        prefixes.dedup();
        for p in prefixes {
            let cfg = SearchConfig::new(4, b..=b, f64::NEG_INFINITY).with_mode(Mode::RootBranch(p.clone()));
            let expected: Vec<Vec<u32>> = full.iter().filter(|s| s.starts_with(&p)).cloned().collect();
            assert_eq!(digit_lists(&cfg), expected, "b={b} prefix {p:?}");
        }
    }
}

#[test]
fn larger_deviation_budgets_extend_earlier_sets() {
    for b in [11, 13, 17] {
        let mut previous: Vec<Vec<u32>> = Vec::new();
        for budget in 0..4 {
            let cfg = SearchConfig::new(4, b..=b, f64::NEG_INFINITY).with_mode(Mode::GreedyDeviation(budget));
            let found = digit_lists(&cfg);
            let reference = greedy_reference(b, 4);
            for s in &found {
                let top = *s.last().unwrap();
                let skipped = reference.iter().filter(|&&r| r < top && !s.contains(&r)).count();
                assert!(skipped <= budget as usize);
            }
            for s in &previous {
                assert!(
                    found.iter().any(|t| s.iter().all(|d| t.contains(d))),
                    "b={b} budget {budget}: nothing extends {s:?}"
                );
            }
            previous = found;
        }
    }
}

#[test]
fn caps_bound_each_position() {
    let caps = vec![0, 1, 3, 5, 8, 10, 14, 18];
    let cfg = SearchConfig::new(4, 22..=22, f64::NEG_INFINITY).with_mode(Mode::TermwiseCaps(caps.clone()));
    let found = digit_lists(&cfg);
    assert!(found.contains(&vec![0, 1, 2, 4, 5, 7, 8, 9, 14, 17]));
    for s in &found {
        assert!(s.iter().zip(&caps).all(|(d, c)| d <= c), "{s:?}");
        assert!(brute_kfree_mod(22, 4, s));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = SearchConfig::new(4, 3..=16, 4.0);
    let runs: Vec<_> = [1, 3, 8]
        .into_iter()
        .map(|threads| {
            let opts = RunOptions {
                threads,
                ..RunOptions::default()
            };
            run_search(&cfg, &opts, |_, _| Ok(())).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn checkpoint_resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("search.ckpt");
    let cfg = SearchConfig::new(4, 3..=22, 4.3);
    let reference = run_search(&cfg, &RunOptions::default(), |_, _| Ok(())).unwrap();

    let mut stops = 0;
    loop {
        let opts = RunOptions {
            checkpoint: Some(path.clone()),
            resume: true,
            max_units: Some(3),
            checkpoint_interval: 1,
            threads: 2,
            started_at: Some("2024-05-01T00:00:00Z".into()),
        };
        let out = run_search(&cfg, &opts, |_, _| Ok(())).unwrap();
        assert_eq!(out.started_at.as_deref(), Some("2024-05-01T00:00:00Z"));
        if out.complete {
            assert_eq!(out.records, reference.records);
            assert_eq!(out.stats, reference.stats);
            break;
        }
        stops += 1;
        assert!(stops < 1000);
    }
    assert!(stops > 1);
}
