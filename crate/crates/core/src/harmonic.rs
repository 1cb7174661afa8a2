//! Certified harmonic sums of shifted Kempner sets.
//!
//! Members of `K(S, b)` are grouped into strata `K_i` by digit count. The
//! first few strata are summed term by term. Past that, each stratum is
//! represented by its power sums `T_i(j) = Σ x^-j`, and the next stratum
//! follows from the binomial expansion of `(bx + d)^-j` in powers of
//! `d / (bx)`:
//!
//! ```text
//! T_{i+1}(j) = Σ_m (-1)^m C(j+m-1, m) β_m b^-(j+m) T_i(j+m),   β_m = Σ_{d∈S} d^m
//! ```
//!
//! Every quantity carries an absolute error bound covering series truncation,
//! the shift expansion `1/(x+n) = Σ (-n)^(m-1) x^-m`, the geometric tail of
//! the unvisited strata, and floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::progressions::ResidueSet;

const UNIT: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    /// Target absolute error.
    pub target_error: f64,
    /// Number of power sums carried per stratum.
    pub series_order: usize,
    /// Strata up to this digit count are summed directly.
    pub direct_depth: u32,
    /// Deepest stratum visited; derived from the digit density when `None`.
    pub max_depth: Option<u32>,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self {
            target_error: 1e-9,
            series_order: 24,
            direct_depth: 2,
            max_depth: None,
        }
    }
}

impl PrecisionConfig {
    pub fn with_target(target_error: f64) -> Self {
        Self {
            target_error,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_error.is_finite() && self.target_error > 0.0) {
            return Err(Error::InvalidPrecision(format!(
                "target error must be positive, got {}",
                self.target_error
            )));
        }
        if self.series_order < 2 {
            return Err(Error::InvalidPrecision("series order must be at least 2".into()));
        }
        if self.direct_depth < 2 {
            return Err(Error::InvalidPrecision("direct depth must be at least 2".into()));
        }
        Ok(())
    }
}

/// Where the reported error bound comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Binomial series truncation in the stratum recursion.
    pub truncation: f64,
    /// Truncation of the shift expansion.
    pub shift: f64,
    /// Strata beyond the last one visited.
    pub tail: f64,
    pub rounding: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.truncation + self.shift + self.tail + self.rounding
    }
}

/// A harmonic sum with a rigorous absolute error bound: the exact value lies
/// in `[value - error_bound, value + error_bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedSum {
    pub value: f64,
    pub error_bound: f64,
    /// Deepest stratum included.
    pub depth: u32,
    pub budget: ErrorBudget,
    pub config: PrecisionConfig,
}

impl CertifiedSum {
    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.error_bound
    }
}

/// Compensated (Neumaier) accumulator that also tracks Σ|x| for error bounds.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    compensation: f64,
    magnitude: f64,
    count: usize,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += x.abs();
        self.count += 1;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Bound on the rounding error of `value()` given a relative error of
    /// `term_error` in each summand.
    fn rounding(&self, term_error: f64) -> f64 {
        let n = self.count as f64;
        (term_error + 2.0 * UNIT + 2.0 * n * UNIT * UNIT) * self.magnitude * (1.0 + 4.0 * UNIT)
    }
}

/// `Σ_{m > kept} C(j+m-1, m) ρ^m`, the remainder of `(1 - ρ)^-j` after the
/// terms `m ≤ kept`.
fn binomial_remainder(j: usize, kept: usize, rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let mut m = kept + 1;
    // C(j + m - 1, m) ρ^m, built multiplicatively
    let mut term = 1.0;
    for i in 1..=m {
        term *= (j + i - 1) as f64 / i as f64 * rho;
    }
    let mut total = 0.0;
    loop {
        total += term;
        let ratio = (j + m) as f64 / (m + 1) as f64 * rho;
        // the ratio of successive terms decreases in m
        if ratio <= 0.5 * (1.0 + rho) {
            total += term * ratio / (1.0 - ratio);
            break;
        }
        term *= ratio;
        m += 1;
    }
    total * (1.0 + 1e-12)
}

/// Members of the strata `K_1, …, K_depth`.
fn direct_strata(digits: &ResidueSet, depth: u32) -> Vec<Vec<u64>> {
    let b = digits.base() as u64;
    let mut strata: Vec<Vec<u64>> = Vec::with_capacity(depth as usize);
    let first: Vec<u64> = digits.members().iter().filter(|&&d| d > 0).map(|&d| d as u64).collect();
    strata.push(first);
    for _ in 1..depth {
        let prev = strata.last().unwrap();
        let next = prev
            .iter()
            .flat_map(|&x| digits.members().iter().map(move |&d| b * x + d as u64))
            .collect();
        strata.push(next);
    }
    strata
}

/// Power sums of one stratum, normalized so nothing overflows or underflows:
/// `scaled[j-1] = Σ_{x∈K_i} (x / b^(i-1))^-j / |S|^(i-D)`.
#[derive(Debug, Clone)]
struct StratumSums {
    depth: u32,
    scaled: Vec<f64>,
    truncation: Vec<f64>,
    rounding: Vec<f64>,
}

struct Recursion {
    digits: Vec<f64>,
    max_digit: f64,
    base: f64,
    order: usize,
    binomial: Vec<Vec<f64>>,
    // b^-depth of the current stratum
    inv_base_pow: f64,
    current: StratumSums,
}

impl Recursion {
    fn start(digits: &ResidueSet, members: &[u64], depth: u32, order: usize) -> Self {
        let base = digits.base() as f64;
        let inv_scale = 1.0 / base.powi(depth as i32 - 1);
        let mut accs = vec![Accumulator::default(); order];
        for &x in members {
            let inv_y = 1.0 / (x as f64 * inv_scale);
            let mut p = 1.0;
            for acc in accs.iter_mut() {
                p *= inv_y;
                acc.add(p);
            }
        }
        let scaled = accs.iter().map(Accumulator::value).collect();
        let rounding = accs
            .iter()
            .enumerate()
            .map(|(j, acc)| acc.rounding((j as f64 + 4.0) * UNIT))
            .collect();

        let mut binomial = vec![vec![0.0; 2 * order + 1]; 2 * order + 1];
        for n in 0..binomial.len() {
            binomial[n][0] = 1.0;
            for k in 1..=n {
                binomial[n][k] = binomial[n - 1][k - 1] + binomial[n - 1][k];
            }
        }

        Self {
            digits: digits.members().iter().map(|&d| d as f64).collect(),
            max_digit: digits.max_digit().unwrap_or(0) as f64,
            base,
            order,
            binomial,
            inv_base_pow: inv_scale / base,
            current: StratumSums {
                depth,
                scaled,
                truncation: vec![0.0; order],
                rounding,
            },
        }
    }

    fn step(&mut self) {
        let order = self.order;
        let cur = &self.current;
        let card = self.digits.len() as f64;

        // γ_m = mean over digits of (d / b^i)^m
        let mut gamma = vec![0.0; order];
        for &d in &self.digits {
            let t = d * self.inv_base_pow;
            let mut p = 1.0;
            for g in gamma.iter_mut() {
                *g += p;
                p *= t;
            }
        }
        for g in gamma.iter_mut() {
            *g /= card;
        }
        let rho = (self.max_digit * self.inv_base_pow).max(if self.max_digit > 0.0 { f64::MIN_POSITIVE } else { 0.0 });

        let mut scaled = vec![0.0; order];
        let mut truncation = vec![0.0; order];
        let mut rounding = vec![0.0; order];
        for j in 1..=order {
            let kept = order - j;
            let mut acc = Accumulator::default();
            let mut prop_trunc = 0.0;
            let mut prop_round = 0.0;
            for (m, g) in gamma.iter().enumerate().take(kept + 1) {
                let c = self.binomial[j + m - 1][m] * g;
                let term = c * cur.scaled[j + m - 1];
                acc.add(if m % 2 == 0 { term } else { -term });
                prop_trunc += c * cur.truncation[j + m - 1];
                prop_round += c * cur.rounding[j + m - 1];
            }
            let upper = cur.scaled[j - 1] + cur.truncation[j - 1] + cur.rounding[j - 1];
            scaled[j - 1] = acc.value();
            truncation[j - 1] = prop_trunc + upper * binomial_remainder(j, kept, rho);
            rounding[j - 1] = prop_round + acc.rounding((2 * order + 6) as f64 * UNIT);
        }
        self.current = StratumSums {
            depth: cur.depth + 1,
            scaled,
            truncation,
            rounding,
        };
        self.inv_base_pow /= self.base;
    }
}

/// Power sums `T_i(j) = Σ_{x∈K_i} x^-j` for `j = 1..=order` of one stratum,
/// with absolute error bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSums {
    pub depth: u32,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Power sums of stratum `depth` of `K(S, b)`: by enumeration when
/// `depth ≤ cfg.direct_depth`, otherwise by the stratum recursion.
pub fn depth_power_sums(digits: &ResidueSet, depth: u32, cfg: &PrecisionConfig) -> Result<PowerSums> {
    cfg.validate()?;
    if depth == 0 {
        return Err(Error::InvalidPrecision("strata are numbered from 1".into()));
    }
    let order = cfg.series_order;
    if !digits.is_proper() {
        return Err(Error::NotProperSubset { base: digits.base() });
    }
    if digits.members().iter().all(|&d| d == 0) {
        return Ok(PowerSums {
            depth,
            values: vec![0.0; order],
            errors: vec![0.0; order],
        });
    }
    if depth <= cfg.direct_depth {
        let strata = direct_strata(digits, depth);
        let members = strata.last().unwrap();
        let mut values = Vec::with_capacity(order);
        let mut errors = Vec::with_capacity(order);
        for j in 1..=order as i32 {
            let mut acc = Accumulator::default();
            for &x in members {
                acc.add((x as f64).powi(-j));
            }
            values.push(acc.value());
            errors.push(acc.rounding((j as f64 + 4.0) * UNIT));
        }
        return Ok(PowerSums { depth, values, errors });
    }
    let direct = cfg.direct_depth;
    let strata = direct_strata(digits, direct);
    let mut rec = Recursion::start(digits, strata.last().unwrap(), direct, order);
    while rec.current.depth < depth {
        rec.step();
    }
    let card = digits.len() as f64;
    let b = digits.base() as f64;
    let cur = &rec.current;
    let mut values = Vec::with_capacity(order);
    let mut errors = Vec::with_capacity(order);
    for j in 1..=order {
        let exponent = (depth - direct) as f64 * card.ln() - ((depth - 1) as f64 * j as f64) * b.ln();
        let scale = exponent.exp();
        let value = cur.scaled[j - 1] * scale;
        let err = (cur.truncation[j - 1] + cur.rounding[j - 1]) * scale + value.abs() * (exponent.abs() + 4.0) * UNIT;
        values.push(value);
        errors.push(err);
    }
    Ok(PowerSums { depth, values, errors })
}

/// `H_n = 1 + 1/2 + … + 1/n`.
pub fn harmonic_number(n: u64) -> f64 {
    (1..=n).rev().map(|m| 1.0 / m as f64).sum()
}

/// `Σ_{x ∈ K(S,b)} 1/(x + shift)`, certified to `cfg.target_error`.
///
/// With `shift = 0` the member 0 (if present) is left out; otherwise it
/// contributes `1/shift`.
pub fn harmonic_sum_shifted(digits: &ResidueSet, shift: u64, cfg: &PrecisionConfig) -> Result<CertifiedSum> {
    cfg.validate()?;
    if !digits.is_proper() {
        return Err(Error::NotProperSubset { base: digits.base() });
    }
    let b = digits.base() as u64;
    let card = digits.len();
    let mut total = Accumulator::default();
    if shift > 0 && digits.contains(0) {
        total.add(1.0 / shift as f64);
    }
    if digits.members().iter().all(|&d| d == 0) {
        let value = total.value();
        return Ok(CertifiedSum {
            value,
            error_bound: 0.0,
            depth: 1,
            budget: ErrorBudget::default(),
            config: *cfg,
        });
    }

    // deepen the direct part until b^D ≥ 2·shift so the shift series converges
    let mut direct = cfg.direct_depth;
    while (b as f64).powi(direct as i32) < 2.0 * shift as f64 {
        direct += 1;
    }
    let strata = direct_strata(digits, direct);
    for stratum in &strata {
        for &x in stratum {
            total.add(1.0 / (x + shift) as f64);
        }
    }

    let order = cfg.series_order;
    let ratio = card as f64 / b as f64;
    let max_depth = cfg.max_depth.unwrap_or_else(|| {
        let first: f64 = digits
            .members()
            .iter()
            .filter(|&&d| d > 0)
            .map(|&d| 1.0 / d as f64)
            .sum();
        let needed = (cfg.target_error * (1.0 - ratio) / (2.0 * first * ratio)).ln() / ratio.ln();
        direct + 64 + needed.max(0.0).ceil() as u32
    });

    let mut rec = Recursion::start(digits, strata.last().unwrap(), direct, order);
    let mut budget = ErrorBudget::default();
    // T_i(1) = factor · scaled[0]
    let mut factor = 1.0 / (b as f64).powi(direct as i32 - 1);
    let mut factor_error = direct as f64 * 2.0 * UNIT;
    let tail_ratio = ratio / (1.0 - ratio);
    let stratum_upper = |s: &StratumSums| s.scaled[0] + s.truncation[0] + s.rounding[0];

    let mut tail = factor * stratum_upper(&rec.current) * tail_ratio * (1.0 + 4.0 * UNIT);
    loop {
        let depth = rec.current.depth;
        let rounding = budget.rounding + total.rounding(4.0 * UNIT);
        let bound = budget.truncation + budget.shift + rounding + tail;
        if bound <= cfg.target_error || depth >= max_depth {
            let reached = bound <= cfg.target_error;
            let budget = ErrorBudget {
                rounding,
                tail,
                ..budget
            };
            if !reached {
                return Err(Error::PrecisionNotReached {
                    target: cfg.target_error,
                    best_bound: budget.total(),
                    depth,
                });
            }
            return Ok(CertifiedSum {
                value: total.value(),
                error_bound: budget.total(),
                depth,
                budget,
                config: *cfg,
            });
        }

        rec.step();
        factor *= ratio;
        factor_error += 2.0 * UNIT;
        let cur = &rec.current;
        let q = shift as f64 / (b as f64).powi(cur.depth as i32 - 1);
        let mut level = Accumulator::default();
        let mut prop_trunc = 0.0;
        let mut prop_round = 0.0;
        let mut qp = 1.0;
        let terms = if shift == 0 { 1 } else { order };
        for m in 0..terms {
            let term = qp * cur.scaled[m];
            level.add(if m % 2 == 0 { term } else { -term });
            prop_trunc += qp * cur.truncation[m];
            prop_round += qp * cur.rounding[m];
            qp *= q;
        }
        let upper = stratum_upper(cur);
        if shift > 0 {
            budget.shift += factor * upper * qp / (1.0 - q);
        }
        budget.truncation += factor * prop_trunc;
        let contribution = factor * level.value();
        budget.rounding += factor * (prop_round + level.rounding((order as f64 + 4.0) * UNIT))
            + contribution.abs() * (factor_error + 2.0 * UNIT);
        total.add(contribution);
        tail = factor * upper * tail_ratio * (1.0 + factor_error + 4.0 * UNIT);
    }
}

/// The fitness score `(1 / (1 - |S|/b)) · Σ_{s∈S} 1/(s+1)`.
///
/// A first-order model of `H(K(S, b) + 1)` used for ranking and pruning; it is
/// not a bound of either sign. Infinite when `S` is all of `[0, b-1]`.
pub fn quick_estimate(digits: &ResidueSet) -> f64 {
    let density = digits.len() as f64 / digits.base() as f64;
    let head: f64 = digits.members().iter().map(|&s| 1.0 / (s as f64 + 1.0)).sum();
    head / (1.0 - density)
}

/// Both sides of
/// `Σ_{s∈P} 1/(s+n) = Σ_{s∈P} 1/s + Σ_{s∉P} n/(s(s+n)) - H_n`
/// over the positive members `P` of `K(S, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftDecomposition {
    pub lhs: f64,
    pub lhs_error: f64,
    pub rhs: f64,
    pub rhs_error: f64,
    /// `Σ_{s∉P, s≥1} n/(s(s+n))`.
    pub complement: f64,
    pub harmonic_number: f64,
}

impl ShiftDecomposition {
    pub fn consistent(&self) -> bool {
        (self.lhs - self.rhs).abs() <= self.lhs_error + self.rhs_error
    }
}

/// `Σ_{s∈P} n/(s(s+n))` by direct enumeration of strata, with the remaining
/// strata bounded through `Σ x^-2`, which shrinks by `|S|/b²` per stratum.
/// Enumeration stops at about 16M terms; the bound returned may then exceed
/// `target`.
fn shift_difference(digits: &ResidueSet, shift: u64, target: f64) -> (f64, f64) {
    const MAX_STRATUM: usize = 1 << 24;
    let b = digits.base() as u64;
    let n = shift as f64;
    let ratio = digits.len() as f64 / (b * b) as f64;
    let mut acc = Accumulator::default();
    let mut stratum: Vec<u64> = digits.members().iter().filter(|&&d| d > 0).map(|&d| d as u64).collect();
    loop {
        let mut squares = Accumulator::default();
        for &x in &stratum {
            let x = x as f64;
            acc.add(n / (x * (x + n)));
            squares.add(1.0 / (x * x));
        }
        let tail = n * (squares.value() + squares.rounding(4.0 * UNIT)) * ratio / (1.0 - ratio);
        let bound = tail + acc.rounding(6.0 * UNIT);
        if bound <= target || stratum.len() * digits.len() > MAX_STRATUM {
            return (acc.value(), bound);
        }
        stratum = stratum
            .iter()
            .flat_map(|&x| digits.members().iter().map(move |&d| b * x + d as u64))
            .collect();
    }
}

/// Evaluates the shift identity for `n ≥ 1`. The left side comes from the
/// shifted engine run, `Σ 1/s` from an unshifted run, and the complement from
/// the telescoping identity `Σ_{m≥1} n/(m(m+n)) = H_n` together with a
/// direct evaluation of `Σ_{s∈P} n/(s(s+n))`.
pub fn shift_sum_decomposition(digits: &ResidueSet, shift: u64, cfg: &PrecisionConfig) -> Result<ShiftDecomposition> {
    if shift == 0 {
        return Err(Error::InvalidPrecision("shift must be at least 1".into()));
    }
    let shifted = harmonic_sum_shifted(digits, shift, cfg)?;
    let plain = harmonic_sum_shifted(digits, 0, cfg)?;
    let (difference, difference_error) = shift_difference(digits, shift, cfg.target_error);
    let h_n = harmonic_number(shift);
    let h_n_error = 2.0 * shift as f64 * UNIT * h_n;

    let zero_term = if digits.contains(0) { 1.0 / shift as f64 } else { 0.0 };
    let lhs = shifted.value - zero_term;
    let complement = h_n - difference;
    let rhs = plain.value + complement - h_n;
    let slack = 4.0 * UNIT * (lhs.abs() + plain.value.abs() + h_n + complement.abs());
    Ok(ShiftDecomposition {
        lhs,
        lhs_error: shifted.error_bound + slack,
        rhs,
        rhs_error: plain.error_bound + difference_error + 2.0 * h_n_error + slack,
        complement,
        harmonic_number: h_n,
    })
}
