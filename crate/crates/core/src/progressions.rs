//! Arithmetic progressions on residues mod `b`.
//!
//! A residue set `S ⊂ [0, b-1]` contains a *progression mod b* of length `k`
//! when some integer progression `c, c+Δ, …, c+(k-1)Δ` with `b ∤ Δ` reduces
//! entirely into `S`. Residues may repeat along the progression, so
//! `{1, 3, 5}` mod 6 contains progressions of every length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kempner::{longest_ap, FiniteSet};

/// A base `b ≥ 2` together with a sorted, duplicate-free set of residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueSet {
    base: u32,
    members: Vec<u32>,
}

impl ResidueSet {
    pub fn new(base: u32, digits: impl IntoIterator<Item = u32>) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        let mut members: Vec<u32> = digits.into_iter().collect();
        members.sort_unstable();
        for pair in members.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateDigit(pair[0]));
            }
        }
        if let Some(&digit) = members.last() {
            if digit >= base {
                return Err(Error::DigitOutOfRange { digit, base });
            }
        }
        Ok(Self { base, members })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, digit: u32) -> bool {
        self.members.binary_search(&digit).is_ok()
    }

    pub fn max_digit(&self) -> Option<u32> {
        self.members.last().copied()
    }

    /// True when the set omits at least one residue, as required for a Kempner set.
    pub fn is_proper(&self) -> bool {
        self.members.len() < self.base as usize
    }

    pub fn with(&self, digit: u32) -> Result<Self> {
        Self::new(self.base, self.members.iter().copied().chain([digit]))
    }

    pub(crate) fn mask(&self) -> DigitMask {
        let mut mask = DigitMask::new(self.base);
        for &m in &self.members {
            mask.insert(m);
        }
        mask
    }
}

impl std::fmt::Display for ResidueSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// A progression mod `b` found inside a residue set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApWitness {
    pub start: u32,
    pub step: u32,
    pub length: u32,
}

impl ApWitness {
    pub fn residues(&self, base: u32) -> impl Iterator<Item = u32> + '_ {
        let base = base as u64;
        (0..self.length as u64).map(move |j| ((self.start as u64 + j * self.step as u64) % base) as u32)
    }
}

/// Fixed-width bitset over `[0, b-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DigitMask {
    words: Vec<u64>,
}

impl DigitMask {
    pub(crate) fn new(base: u32) -> Self {
        Self {
            words: vec![0; (base as usize).div_ceil(64)],
        }
    }

    #[inline]
    pub(crate) fn insert(&mut self, digit: u32) {
        self.words[(digit >> 6) as usize] |= 1 << (digit & 63);
    }

    #[inline]
    pub(crate) fn contains(&self, digit: u32) -> bool {
        self.words[(digit >> 6) as usize] & (1 << (digit & 63)) != 0
    }
}

fn check_length(k: u32) -> Result<()> {
    if k < 3 {
        return Err(Error::InvalidLength(k));
    }
    Ok(())
}

/// Tests whether `set` is k-free mod b.
///
/// Lays out `k` translates `S, S+b, …, S+(k-1)b` on the integer line and
/// looks for an increasing k-term progression with difference in `[1, b-1]`.
/// Any progression mod b can be moved so its first term lies in `[0, b-1]`,
/// after which all k terms fall below `kb`, so the window is exhaustive.
pub fn is_kfree_mod(set: &ResidueSet, k: u32) -> Result<bool> {
    check_length(k)?;
    let b = set.base as usize;
    let width = b * k as usize;
    let mut window = vec![false; width];
    for j in 0..k as usize {
        for &m in &set.members {
            window[m as usize + j * b] = true;
        }
    }
    for &first in &set.members {
        let first = first as usize;
        for step in 1..b {
            if (1..k as usize).all(|i| window[first + i * step]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Returns the lexicographically smallest `(step, start)` progression mod b
/// of length `k` inside `set`, or `None` when the set is k-free mod b.
pub fn find_ap_witness(set: &ResidueSet, k: u32) -> Result<Option<ApWitness>> {
    check_length(k)?;
    let b = set.base as u64;
    let mask = set.mask();
    for step in 1..b {
        for start in 0..b {
            if (0..k as u64).all(|j| mask.contains(((start + j * step) % b) as u32)) {
                return Ok(Some(ApWitness {
                    start: start as u32,
                    step: step as u32,
                    length: k,
                }));
            }
        }
    }
    Ok(None)
}

/// Whether inserting `digit` into the k-free-mod-b set `mask` creates a
/// progression mod b of length `k`. Only progressions through `digit` are
/// examined.
pub(crate) fn closes_progression(mask: &DigitMask, base: u32, k: u32, digit: u32) -> bool {
    let b = base as u64;
    let reach = k - 1;
    let member = |r: u64| r as u32 == digit || mask.contains(r as u32);
    // steps Δ and b-Δ trace the same residue line in opposite directions
    for step in 1..=b / 2 {
        let mut forward = 0;
        let mut r = digit as u64;
        while forward < reach {
            r = (r + step) % b;
            if !member(r) {
                break;
            }
            forward += 1;
        }
        if forward == reach {
            return true;
        }
        let mut backward = 0;
        let mut r = digit as u64;
        while forward + backward < reach {
            r = (r + b - step) % b;
            if !member(r) {
                break;
            }
            backward += 1;
        }
        if forward + backward >= reach {
            return true;
        }
    }
    false
}

/// A node of the depth-first search: a k-free-mod-b digit set together with
/// the digits above its maximum that can still be added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchState {
    digits: ResidueSet,
    k: u32,
    candidates: Vec<u32>,
    mask: DigitMask,
}

impl SearchState {
    /// Builds the state rooted at `prefix`, computing its candidates from
    /// scratch. Candidate digits come from `[0, b-2]`.
    pub fn new(prefix: ResidueSet, k: u32) -> Result<Self> {
        check_length(k)?;
        if let Some(witness) = find_ap_witness(&prefix, k)? {
            return Err(Error::ContainsProgression {
                start: witness.start as u64,
                step: witness.step as u64,
                length: witness.length,
            });
        }
        let lowest = prefix.max_digit().map_or(0, |m| m + 1);
        let mut candidates = Vec::new();
        for t in lowest..prefix.base().saturating_sub(1) {
            if is_kfree_mod(&prefix.with(t)?, k)? {
                candidates.push(t);
            }
        }
        let mask = prefix.mask();
        Ok(Self {
            digits: prefix,
            k,
            candidates,
            mask,
        })
    }

    /// The state `({0}, T)` for base `b`.
    pub fn rooted_at_zero(base: u32, k: u32) -> Result<Self> {
        Self::new(ResidueSet::new(base, [0])?, k)
    }

    pub fn digits(&self) -> &ResidueSet {
        &self.digits
    }

    pub fn candidates(&self) -> &[u32] {
        &self.candidates
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn base(&self) -> u32 {
        self.digits.base
    }

    /// Moves to `(S ∪ {t}, T')` where `T'` keeps the candidates above `t`
    /// that remain admissible once `t` is present.
    pub fn extend(&self, t: u32) -> Result<Self> {
        let pos = self.candidates.binary_search(&t).map_err(|_| Error::NotACandidate(t))?;
        let mut mask = self.mask.clone();
        mask.insert(t);
        let base = self.base();
        let candidates = self.candidates[pos + 1..]
            .iter()
            .copied()
            .filter(|&u| !closes_progression(&mask, base, self.k, u))
            .collect();
        let mut members = self.digits.members.clone();
        members.push(t);
        Ok(Self {
            digits: ResidueSet { base, members },
            k: self.k,
            candidates,
            mask,
        })
    }

    pub(crate) fn mask(&self) -> &DigitMask {
        &self.mask
    }
}

/// Smallest base guaranteed to make the finite k-free set `set` k-free mod b:
/// every `b > 2·max(set)` works, so this returns `2·max(set) + 1`.
pub fn embedding_base(set: &FiniteSet, k: u32) -> Result<u64> {
    check_length(k)?;
    let max = set.max().ok_or(Error::NeedsPositiveElements)?;
    let (length, witness) = longest_ap(set);
    if length >= k as usize {
        let (start, step) = witness.expect("progressions of length >= 3 carry a witness");
        return Err(Error::ContainsProgression {
            start,
            step,
            length: length as u32,
        });
    }
    Ok(2 * max + 1)
}
