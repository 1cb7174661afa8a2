//! Brute-force oracles and the randomized oracle suites shared by the
//! property tests and the acceptance target.
#![allow(dead_code)]

use std::collections::HashSet;

use kfree_core::{
    embedding_base, find_ap_witness, greedy_set, harmonic_sum_shifted, is_kfree_mod, kfree_certificate, longest_ap,
    shift_sum_decomposition, FiniteSet, KempnerSpec, PrecisionConfig, ResidueSet,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_shrink_iters: 512,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Scans every start `c ∈ [0, b)` and step `Δ ∈ [1, b)` for k residues in S.
pub fn brute_kfree_mod(b: u32, k: u32, digits: &[u32]) -> bool {
    let member: HashSet<u32> = digits.iter().copied().collect();
    for step in 1..b {
        for c in 0..b {
            if (0..k).all(|i| member.contains(&((c + i * step) % b))) {
                return false;
            }
        }
    }
    true
}

/// True when some k-term progression of positive step lies in `set`.
pub fn brute_has_ap(set: &[u64], k: u32) -> bool {
    let member: HashSet<u64> = set.iter().copied().collect();
    for (i, &x) in set.iter().enumerate() {
        for &y in &set[i + 1..] {
            let step = y.abs_diff(x);
            let lo = x.min(y);
            if step > 0 && (0..k as u64).all(|j| member.contains(&(lo + j * step))) {
                return true;
            }
        }
    }
    false
}

/// Longest progression by checking every pair as a starting pair.
pub fn brute_longest_ap(set: &[u64]) -> usize {
    let member: HashSet<u64> = set.iter().copied().collect();
    let mut best = set.len().min(1);
    for (i, &x) in set.iter().enumerate() {
        for &y in &set[i + 1..] {
            let step = y - x;
            let mut len = 2;
            while member.contains(&(x + len as u64 * step)) {
                len += 1;
            }
            best = best.max(len);
        }
    }
    best
}

/// Greedy k-free set of positive integers, checking every step at each n.
pub fn naive_greedy(k: u32, count: usize) -> Vec<u64> {
    let k = k as u64;
    let mut member = vec![false];
    let mut out = Vec::new();
    let mut n = 0u64;
    while out.len() < count {
        n += 1;
        let closes = (1..=(n - 1) / (k - 1)).any(|d| (1..k).all(|j| member[(n - j * d) as usize]));
        member.push(!closes);
        if !closes {
            out.push(n);
        }
    }
    out
}

pub fn digits_all_in(mut x: u64, b: u64, allowed: &[u32]) -> bool {
    loop {
        if !allowed.contains(&((x % b) as u32)) {
            return false;
        }
        x /= b;
        if x == 0 {
            return true;
        }
    }
}

/// `Σ 1/(x + shift)` over positive `x + shift` with `x ∈ K(S, b)` of at most
/// `depth` digits.
pub fn direct_partial_sum(b: u32, digits: &[u32], shift: u64, depth: u32) -> f64 {
    let b = b as u64;
    let mut level: Vec<u64> = digits.iter().map(|&d| d as u64).collect();
    let mut total = 0.0;
    let mut compensation = 0.0;
    for len in 1..=depth {
        for &x in &level {
            let v = x + shift;
            if v > 0 {
                let y = 1.0 / v as f64 - compensation;
                let t = total + y;
                compensation = (t - total) - y;
                total = t;
            }
        }
        if len == depth {
            break;
        }
        level = level
            .iter()
            .filter(|&&x| x > 0)
            .flat_map(|&x| digits.iter().map(move |&d| b * x + d as u64))
            .collect();
    }
    total
}

/// Bound on the members with more than `depth` digits: stratum i holds at
/// most `|S|^i` members, each at least `b^(i-1)`.
pub fn partial_tail(b: u32, size: usize, depth: u32) -> f64 {
    let r = size as f64 / b as f64;
    b as f64 * r.powi(depth as i32 + 1) / (1.0 - r)
}

/// Random subset of `[0, b)` with a random inclusion rate.
pub fn subset_of(b: u32) -> impl Strategy<Value = Vec<u32>> {
    (0.05f64..0.95).prop_flat_map(move |p| {
        proptest::collection::vec(proptest::bool::weighted(p), b as usize).prop_map(|mask| {
            mask.iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| i as u32)
                .collect()
        })
    })
}

/// Adds digits in the given order whenever the brute oracle says the set
/// stays k-free mod b.
pub fn grow_kfree_mod(b: u32, k: u32, start: Vec<u32>, order: &[u32], limit: usize) -> Vec<u32> {
    let mut set = start;
    for &t in order {
        if set.len() >= limit {
            break;
        }
        if set.contains(&t) {
            continue;
        }
        set.push(t);
        if !brute_kfree_mod(b, k, &set) {
            set.pop();
        }
    }
    set.sort_unstable();
    set
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// (a) Window test against the full `(c, Δ)` scan, witnesses included.
pub fn suite_window(cases: u32) -> Result<(), String> {
    let strategy = (3u32..=30, 3u32..=6).prop_flat_map(|(b, k)| (Just(b), Just(k), subset_of(b)));
    runner(cases)
        .run(&strategy, |(b, k, digits)| {
            let set = ResidueSet::new(b, digits.iter().copied()).unwrap();
            let fast = is_kfree_mod(&set, k).unwrap();
            let slow = brute_kfree_mod(b, k, &digits);
            prop_assert_eq!(fast, slow, "b={} k={} S={:?}", b, k, digits);
            match find_ap_witness(&set, k).unwrap() {
                None => prop_assert!(fast),
                Some(w) => {
                    prop_assert!(!fast);
                    prop_assert!((1..b).contains(&w.step));
                    for r in w.residues(b) {
                        prop_assert!(set.contains(r), "witness residue {} not in {:?}", r, digits);
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// (b) Certified digit sets give Kempner sets whose truncation to `b^4`
/// has no k-term progression.
pub fn suite_certificate(cases: u32) -> Result<(), String> {
    let strategy = (3u32..=20, 3u32..=5, 1usize..=7).prop_flat_map(|(b, k, limit)| {
        let order: Vec<u32> = (1..b).collect();
        (Just(b), Just(k), Just(limit), Just(order).prop_shuffle())
    });
    runner(cases)
        .run(&strategy, |(b, k, limit, order)| {
            let digits = grow_kfree_mod(b, k, vec![0], &order, limit);
            let spec = KempnerSpec::new(ResidueSet::new(b, digits.iter().copied()).unwrap(), 0).unwrap();
            prop_assert!(kfree_certificate(&spec, k).unwrap());
            let truncated = spec.enumerate_upto((b as u64).pow(4));
            let (len, _) = longest_ap(&truncated);
            prop_assert!(
                len < k as usize,
                "S={:?} b={} k={}: progression of length {}",
                digits,
                b,
                k,
                len
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// (c) A k-free set inside `[0, M]` is k-free mod every `b > 2M`.
pub fn suite_embedding(cases: u32) -> Result<(), String> {
    let strategy = (
        3u32..=5,
        1usize..=20,
        Just((0u64..=40).collect::<Vec<_>>()).prop_shuffle(),
    );
    runner(cases)
        .run(&strategy, |(k, limit, order)| {
            let mut set: Vec<u64> = Vec::new();
            for &t in &order {
                if set.len() >= limit {
                    break;
                }
                set.push(t);
                set.sort_unstable();
                if brute_has_ap(&set, k) {
                    set.retain(|&x| x != t);
                }
            }
            let m = *set.iter().max().unwrap();
            let base = embedding_base(&FiniteSet::new(set.iter().copied()), k).unwrap();
            prop_assert!(base <= 2 * m + 1);
            for b in [2 * m + 1, 2 * m + 2, 2 * m + 10] {
                let b = (b as u32).max(3);
                let residues = ResidueSet::new(b, set.iter().map(|&x| x as u32)).unwrap();
                prop_assert!(is_kfree_mod(&residues, k).unwrap(), "S={:?} k={} b={}", set, k, b);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn proper_digits() -> impl Strategy<Value = (u32, Vec<u32>)> {
    (3u32..=12).prop_flat_map(|b| {
        (Just(b), subset_of(b)).prop_filter("non-empty proper subset", move |(b, s)| {
            !s.is_empty() && s.len() < *b as usize
        })
    })
}

/// (d) Shift identity: both sides agree within their combined bounds.
pub fn suite_shift_identity(cases: u32) -> Result<(), String> {
    let cfg = PrecisionConfig::with_target(1e-8);
    let strategy = (proper_digits(), 1u64..=12);
    runner(cases)
        .run(&strategy, |((b, digits), n)| {
            let set = ResidueSet::new(b, digits.iter().copied()).unwrap();
            let d =
                shift_sum_decomposition(&set, n, &cfg).map_err(|e| fail(format!("b={b} S={digits:?} n={n}: {e}")))?;
            prop_assert!(
                (d.lhs - d.rhs).abs() <= d.lhs_error + d.rhs_error,
                "b={} S={:?} n={}: lhs {} rhs {}",
                b,
                digits,
                n,
                d.lhs,
                d.rhs
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Deepest digit count whose full enumeration stays near two million terms.
pub fn partial_depth(size: usize) -> u32 {
    let mut depth = 1;
    while depth < 9 && (size as f64).powi(depth as i32 + 1) <= 2e6 {
        depth += 1;
    }
    depth
}

/// (e) Certified interval meets the interval `[partial, partial + tail]`.
pub fn suite_engine_vs_direct(cases: u32) -> Result<(), String> {
    let cfg = PrecisionConfig::with_target(1e-8);
    let strategy = (proper_digits(), 0u64..=2);
    runner(cases)
        .run(&strategy, |((b, digits), n)| {
            let set = ResidueSet::new(b, digits.iter().copied()).unwrap();
            let sum =
                harmonic_sum_shifted(&set, n, &cfg).map_err(|e| fail(format!("b={b} S={digits:?} n={n}: {e}")))?;
            let depth = partial_depth(digits.len());
            let partial = direct_partial_sum(b, &digits, n, depth);
            let tail = partial_tail(b, digits.len(), depth);
            let slack = 1e-9 * (1.0 + partial);
            prop_assert!(
                sum.upper() >= partial - slack,
                "b={} S={:?} n={}: {:?} below partial {}",
                b,
                digits,
                n,
                sum,
                partial
            );
            prop_assert!(
                sum.lower() <= partial + tail + slack,
                "b={} S={:?} n={}: {:?} above partial {} + tail {}",
                b,
                digits,
                n,
                sum,
                partial,
                tail
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// (f) For prime p the greedy p-free set is `K([0, p-2], p) + 1`.
pub fn check_greedy_kempner(terms: usize) -> Result<(), String> {
    for p in [3u32, 5, 7] {
        let greedy = greedy_set(p, terms).map_err(|e| e.to_string())?;
        let naive = naive_greedy(p, terms);
        if greedy.elements() != naive.as_slice() {
            return Err(format!(
                "p={p}: greedy_set disagrees with the naive greedy construction"
            ));
        }
        let allowed: Vec<u32> = (0..p - 1).collect();
        let digit_form: Vec<u64> = (0u64..)
            .filter(|&x| digits_all_in(x, p as u64, &allowed))
            .map(|x| x + 1)
            .take(terms)
            .collect();
        if naive != digit_form {
            return Err(format!("p={p}: greedy set is not K([0,{}],{p}) + 1", p - 2));
        }
        let spec = KempnerSpec::new(ResidueSet::new(p, allowed.iter().copied()).unwrap(), 1).unwrap();
        let enumerated: Vec<u64> = spec.iter().take(terms).collect();
        if enumerated != digit_form {
            return Err(format!("p={p}: Kempner enumeration disagrees with digit filtering"));
        }
    }
    Ok(())
}

/// (g) Partial harmonic sum of the greedy 4-free set.
pub fn g4_partial_sum(terms: usize) -> Result<f64, String> {
    let g4 = greedy_set(4, terms).map_err(|e| e.to_string())?;
    let prefix = naive_greedy(4, 2000);
    if g4.elements()[..2000] != prefix[..] {
        return Err("greedy_set(4) disagrees with the naive construction".into());
    }
    if brute_has_ap(&g4.elements()[..600], 4) {
        return Err("greedy 4-free prefix contains a 4-term progression".into());
    }
    let mut sum = 0.0;
    for &x in g4.elements().iter().rev() {
        sum += 1.0 / x as f64;
    }
    Ok(sum)
}
