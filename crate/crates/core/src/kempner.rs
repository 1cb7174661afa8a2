//! Kempner sets `K(S, b)`: the non-negative integers whose base-b digits all
//! lie in `S`, optionally translated by a shift `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::progressions::{is_kfree_mod, ResidueSet};

/// `K(S, b) + shift`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KempnerSpec {
    digits: ResidueSet,
    shift: u64,
}

impl KempnerSpec {
    pub fn new(digits: ResidueSet, shift: u64) -> Result<Self> {
        if !digits.is_proper() {
            return Err(Error::NotProperSubset { base: digits.base() });
        }
        Ok(Self { digits, shift })
    }

    pub fn digits(&self) -> &ResidueSet {
        &self.digits
    }

    pub fn base(&self) -> u32 {
        self.digits.base()
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }

    /// Membership test on the base-b expansion of `x - shift`. Zero is the
    /// single digit `0`.
    pub fn contains(&self, x: u64) -> bool {
        let Some(mut y) = x.checked_sub(self.shift) else {
            return false;
        };
        let b = self.base() as u64;
        loop {
            if !self.digits.contains((y % b) as u32) {
                return false;
            }
            y /= b;
            if y == 0 {
                return true;
            }
        }
    }

    /// Members in increasing order.
    pub fn iter(&self) -> KempnerIter<'_> {
        KempnerIter::new(self)
    }

    /// All members `≤ limit`.
    pub fn enumerate_upto(&self, limit: u64) -> FiniteSet {
        FiniteSet {
            elements: self.iter().take_while(|&x| x <= limit).collect(),
        }
    }
}

/// Odometer over the allowed digits: one digit length at a time, digit
/// strings in lexicographic order, which is numeric order within a length.
pub struct KempnerIter<'a> {
    spec: &'a KempnerSpec,
    // indices into the digit list, most significant first
    odometer: Vec<usize>,
    // index of the smallest nonzero digit
    first_nonzero: Option<usize>,
    zero_pending: bool,
    done: bool,
}

impl<'a> KempnerIter<'a> {
    fn new(spec: &'a KempnerSpec) -> Self {
        let digits = spec.digits.members();
        let first_nonzero = digits.iter().position(|&d| d != 0);
        Self {
            spec,
            odometer: Vec::new(),
            first_nonzero,
            zero_pending: spec.digits.contains(0),
            done: first_nonzero.is_none(),
        }
    }

    fn value(&self) -> Option<u64> {
        let digits = self.spec.digits.members();
        let b = self.spec.base() as u64;
        self.odometer
            .iter()
            .try_fold(0u64, |acc, &i| acc.checked_mul(b)?.checked_add(digits[i] as u64))
    }

    fn advance(&mut self) {
        let last = self.spec.digits.len() - 1;
        let first = self.first_nonzero.expect("advance needs a nonzero digit");
        for pos in (0..self.odometer.len()).rev() {
            if self.odometer[pos] < last {
                self.odometer[pos] += 1;
                return;
            }
            self.odometer[pos] = if pos == 0 { first } else { 0 };
        }
        // every position wrapped: move to the next digit length
        self.odometer.push(0);
    }
}

impl Iterator for KempnerIter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.zero_pending {
            self.zero_pending = false;
            return Some(self.spec.shift);
        }
        if self.done {
            return None;
        }
        if self.odometer.is_empty() {
            self.odometer.push(self.first_nonzero.unwrap());
        } else {
            self.advance();
        }
        match self.value().and_then(|v| v.checked_add(self.spec.shift)) {
            Some(v) => Some(v),
            None => {
                self.done = true;
                None
            }
        }
    }
}

/// A sorted, duplicate-free finite set of non-negative integers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSet {
    elements: Vec<u64>,
}

impl FiniteSet {
    pub fn new(elements: impl IntoIterator<Item = u64>) -> Self {
        let mut elements: Vec<u64> = elements.into_iter().collect();
        elements.sort_unstable();
        elements.dedup();
        Self { elements }
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn min(&self) -> Option<u64> {
        self.elements.first().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.elements.last().copied()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// Σ 1/x over the (positive) elements.
    pub fn harmonic_sum(&self) -> f64 {
        self.elements.iter().filter(|&&x| x > 0).map(|&x| 1.0 / x as f64).sum()
    }
}

/// `ln|S| / ln b`, the growth exponent of the counting function of `K(S, b)`.
pub fn log_density(spec: &KempnerSpec) -> f64 {
    (spec.digits().len() as f64).ln() / (spec.base() as f64).ln()
}

enum Membership<'a> {
    Bitmap { offset: u64, bits: Vec<u64> },
    Sorted(&'a [u64]),
}

impl<'a> Membership<'a> {
    fn of(elements: &'a [u64]) -> Self {
        let (Some(&lo), Some(&hi)) = (elements.first(), elements.last()) else {
            return Membership::Sorted(elements);
        };
        if hi - lo > 1 << 28 {
            return Membership::Sorted(elements);
        }
        let mut bits = vec![0u64; ((hi - lo) / 64 + 1) as usize];
        for &x in elements {
            let i = x - lo;
            bits[(i / 64) as usize] |= 1 << (i % 64);
        }
        Membership::Bitmap { offset: lo, bits }
    }

    #[inline]
    fn contains(&self, x: u64) -> bool {
        match self {
            Membership::Bitmap { offset, bits } => {
                let Some(i) = x.checked_sub(*offset) else {
                    return false;
                };
                bits.get((i / 64) as usize).is_some_and(|w| w & (1 << (i % 64)) != 0)
            }
            Membership::Sorted(elements) => elements.binary_search(&x).is_ok(),
        }
    }
}

/// Length of the longest arithmetic progression (difference ≥ 1) inside `set`,
/// with its `(start, difference)` when the length is at least 2.
///
/// Every pair `(a_i, a_j)` is treated as the first two terms of a progression
/// only when `2a_i - a_j` is absent, so each maximal progression is walked
/// once. Ties keep the lexicographically smallest `(start, difference)`.
pub fn longest_ap(set: &FiniteSet) -> (usize, Option<(u64, u64)>) {
    let a = set.elements();
    match a.len() {
        0 => return (0, None),
        1 => return (1, None),
        _ => {}
    }
    let member = Membership::of(a);
    let max = *a.last().unwrap();
    let mut best = (2, Some((a[0], a[1] - a[0])));
    for (i, &first) in a.iter().enumerate() {
        for &second in &a[i + 1..] {
            let step = second - first;
            // a longer run needs first + best·step ≤ max
            if step
                .checked_mul(best.0 as u64)
                .and_then(|s| s.checked_add(first))
                .is_none_or(|end| end > max)
            {
                break;
            }
            if first >= step && member.contains(first - step) {
                continue;
            }
            let mut length = 2;
            let mut next = second + step;
            while member.contains(next) {
                length += 1;
                next += step;
            }
            if length > best.0 {
                best = (length, Some((first, step)));
            }
        }
    }
    best
}

/// Sufficient condition for `K(S, b) + n` to be k-free: `0 ∈ S` and `S` is
/// k-free mod b. A `false` answer does not exhibit a progression.
pub fn kfree_certificate(spec: &KempnerSpec, k: u32) -> Result<bool> {
    if spec.base() < 3 {
        return Err(Error::InvalidBase(spec.base()));
    }
    Ok(spec.digits().contains(0) && is_kfree_mod(spec.digits(), k)?)
}

/// Embeds a finite k-free set of positive integers into a certified k-free
/// shifted Kempner set: digits `S - min(S)`, base `max(k, 2·max(S)) + 1`,
/// shift 1. Each element of `S` has a counterpart in `K + 1` no larger than
/// itself, so `H(K + 1) ≥ H(S)`.
pub fn approximate_by_kempner(set: &FiniteSet, k: u32) -> Result<KempnerSpec> {
    if k < 3 {
        return Err(Error::InvalidLength(k));
    }
    let (Some(min), Some(max)) = (set.min(), set.max()) else {
        return Err(Error::NeedsPositiveElements);
    };
    if min == 0 {
        return Err(Error::NeedsPositiveElements);
    }
    let (length, witness) = longest_ap(set);
    if length >= k as usize {
        let (start, step) = witness.expect("long progressions carry a witness");
        return Err(Error::ContainsProgression {
            start,
            step,
            length: length as u32,
        });
    }
    let base = (k as u64).max(2 * max) + 1;
    let base = u32::try_from(base).map_err(|_| Error::InvalidConfig(format!("base {base} does not fit in 32 bits")))?;
    let digits = ResidueSet::new(base, set.elements().iter().map(|&x| (x - min) as u32))?;
    KempnerSpec::new(digits, 1)
}

/// The first `count` elements of the lexicographically earliest k-free set
/// of positive integers.
pub fn greedy_set(k: u32, count: usize) -> Result<FiniteSet> {
    if k < 3 {
        return Err(Error::InvalidLength(k));
    }
    let k = k as usize;
    let mut elements: Vec<u64> = Vec::with_capacity(count);
    let mut present: Vec<bool> = vec![false];
    let mut n: u64 = 0;
    while elements.len() < count {
        n += 1;
        let max_step = (n - 1) / (k as u64 - 1);
        // only progressions ending at n matter; their second-to-last term is
        // an existing element within max_step of n
        let closes = elements.iter().rev().take_while(|&&m| n - m <= max_step).any(|&m| {
            let step = n - m;
            (2..k as u64).all(|j| present[(n - j * step) as usize])
        });
        present.push(!closes);
        if !closes {
            elements.push(n);
        }
    }
    Ok(FiniteSet { elements })
}
