//! Branch-and-bound depth-first search over digit sets that are k-free mod b.
//!
//! States are pairs `(S, T)`: a k-free-mod-b set `S` and the digits `T` above
//! `max(S)` that can still be added. A branch is scored by the first-order
//! estimate of `S ∪ T` (or by `|S ∪ T|` for the density objective) and cut
//! when that score cannot reach the threshold. Only maximal survivors are
//! emitted: sets to which no admissible digit of `[0, b-2]` can be added.
//!
//! The subtrees two levels below each root are independent work units. They
//! run on a rayon pool, and results are merged in canonical order, so output
//! does not depend on the thread count. Completed units can be recorded in a
//! checkpoint file and skipped when the search is resumed.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{harmonic_sum_shifted, quick_estimate, CertifiedSum, PrecisionConfig};
use crate::kempner::{log_density, KempnerSpec};
use crate::progressions::{closes_progression, DigitMask, ResidueSet, SearchState};

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;
pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 10_000_000;
const MAX_BASE: u32 = 1_000_000;
// depth below the root at which subtrees become independent work units
const SPLIT_DEPTH: u32 = 2;

/// Restriction of the search space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    /// Only sets whose smallest elements are exactly this prefix.
    RootBranch(Vec<u32>),
    /// At most this many elements of the greedy k-free-mod-b set may be
    /// skipped below `max(S)`.
    GreedyDeviation(u32),
    /// The i-th smallest digit may not exceed `caps[i]`; digits past the end
    /// of the list are unconstrained.
    TermwiseCaps(Vec<u32>),
}

impl Mode {
    pub fn label(&self) -> String {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        match self {
            Mode::Full => "full".into(),
            Mode::RootBranch(p) => format!("root={}", join(p)),
            Mode::GreedyDeviation(n) => format!("greedy-dev={n}"),
            Mode::TermwiseCaps(c) => format!("caps={}", join(c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Maximize the first-order estimate of `H(K(S, b) + 1)`; emit every
    /// maximal set whose estimate reaches the threshold.
    HarmonicEstimate,
    /// Maximize `ln|S| / ln b`; emit the best set of each base.
    LogDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: u32,
    pub bases: RangeInclusive<u32>,
    /// Branches scoring below this are pruned. `-∞` disables pruning.
    pub threshold: f64,
    pub mode: Mode,
    pub objective: Objective,
    pub require_zero: bool,
    /// Number of rescored records to report; not used by the search itself.
    #[serde(skip)]
    pub emit_top: Option<usize>,
    pub node_budget: u64,
}

impl SearchConfig {
    pub fn new(k: u32, bases: RangeInclusive<u32>, threshold: f64) -> Self {
        Self {
            k,
            bases,
            threshold,
            mode: Mode::Full,
            objective: Objective::HarmonicEstimate,
            require_zero: true,
            emit_top: None,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn density(k: u32, bases: RangeInclusive<u32>) -> Self {
        Self {
            objective: Objective::LogDensity,
            threshold: 0.0,
            ..Self::new(k, bases, 0.0)
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k < 3 {
            return Err(Error::InvalidLength(self.k));
        }
        let (lo, hi) = (*self.bases.start(), *self.bases.end());
        if lo < 3 || hi > MAX_BASE || lo > hi {
            return bad(format!(
                "bases must be a non-empty range within [3, {MAX_BASE}], got {lo}..{hi}"
            ));
        }
        if self.threshold.is_nan() || self.threshold == f64::INFINITY {
            return bad(format!("threshold must be finite or -inf, got {}", self.threshold));
        }
        match &self.mode {
            Mode::TermwiseCaps(caps) if caps.windows(2).any(|w| w[0] >= w[1]) => {
                return bad("term-wise caps must be strictly increasing".into());
            }
            Mode::RootBranch(prefix) => {
                if prefix.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("root prefix must be strictly increasing".into());
                }
                if self.require_zero && prefix.first() != Some(&0) {
                    return bad("root prefix must start with 0 when zero is required".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A maximal digit set that survived the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub k: u32,
    pub digits: ResidueSet,
    /// First-order estimate of `H(K(S, b) + 1)`.
    pub estimate: f64,
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<CertifiedSum>,
}

impl CandidateRecord {
    pub fn new(k: u32, digits: ResidueSet) -> Self {
        let estimate = quick_estimate(&digits);
        let density = (digits.len() as f64).ln() / (digits.base() as f64).ln();
        Self {
            k,
            digits,
            estimate,
            density,
            certified: None,
        }
    }

    pub fn base(&self) -> u32 {
        self.digits.base()
    }

    /// Attaches the certified value of `H(K(S, b) + 1)`.
    pub fn certify(&mut self, cfg: &PrecisionConfig) -> Result<&CertifiedSum> {
        let sum = harmonic_sum_shifted(&self.digits, 1, cfg)?;
        Ok(self.certified.insert(sum))
    }

    pub fn spec(&self) -> Result<KempnerSpec> {
        KempnerSpec::new(self.digits.clone(), 1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub pruned: u64,
    pub emitted: u64,
}

impl SearchStats {
    fn absorb(&mut self, other: &SearchStats) {
        self.nodes += other.nodes;
        self.pruned += other.pruned;
        self.emitted += other.emitted;
    }
}

/// Execution settings that do not change the result.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    pub checkpoint: Option<PathBuf>,
    /// Load the checkpoint file, if it exists, and skip its completed units.
    pub resume: bool,
    /// Nodes between checkpoint writes.
    pub checkpoint_interval: u64,
    /// Stop after this many newly completed work units.
    pub max_units: Option<usize>,
    /// Caller-supplied metadata stored in the checkpoint.
    pub started_at: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threads: 0,
            checkpoint: None,
            resume: false,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
            max_units: None,
            started_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Canonically ordered by `(b, digits)`.
    pub records: Vec<CandidateRecord>,
    pub stats: SearchStats,
    /// False when `max_units` stopped the run early.
    pub complete: bool,
    pub started_at: Option<String>,
}

pub const CHECKPOINT_FORMAT: &str = "kfree-search-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub records: Vec<CandidateRecord>,
    pub stats: SearchStats,
}

/// On-disk search progress. Versioned JSON; units are keyed by base and by
/// their index in the deterministic unit order of that base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: SearchConfig,
    pub started_at: Option<String>,
    pub units: BTreeMap<u32, BTreeMap<usize, UnitResult>>,
}

impl Checkpoint {
    fn new(config: &SearchConfig, started_at: Option<String>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            started_at,
            units: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Checkpoint(format!("reading {}: {e}", path.display())))?;
        let cp: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("parsing {}: {e}", path.display())))?;
        if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "{} is not a version {CHECKPOINT_VERSION} search checkpoint",
                path.display()
            )));
        }
        Ok(cp)
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        std::fs::write(&tmp, text)
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| Error::Checkpoint(format!("writing {}: {e}", path.display())))
    }
}

/// Per-base search context.
struct BaseSearch<'a> {
    cfg: &'a SearchConfig,
    base: u32,
    greedy: Vec<u32>,
}

impl<'a> BaseSearch<'a> {
    fn new(cfg: &'a SearchConfig, base: u32) -> Self {
        let greedy = match cfg.mode {
            Mode::GreedyDeviation(_) => greedy_reference(base, cfg.k),
            _ => Vec::new(),
        };
        Self { cfg, base, greedy }
    }

    fn root(&self) -> Result<Option<SearchState>> {
        let prefix: Vec<u32> = match &self.cfg.mode {
            Mode::RootBranch(p) => p.clone(),
            _ if self.cfg.require_zero => vec![0],
            _ => vec![],
        };
        if prefix.iter().any(|&d| d + 1 >= self.base) {
            return Ok(None);
        }
        let prefix = ResidueSet::new(self.base, prefix)?;
        if !self.admits(prefix.members()) {
            return Ok(None);
        }
        match SearchState::new(prefix, self.cfg.k) {
            Ok(state) => Ok(Some(state)),
            Err(Error::ContainsProgression { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Mode constraint on a sorted digit list.
    fn admits(&self, digits: &[u32]) -> bool {
        match &self.cfg.mode {
            Mode::Full | Mode::RootBranch(_) => true,
            Mode::TermwiseCaps(caps) => digits.iter().zip(caps).all(|(d, c)| d <= c),
            Mode::GreedyDeviation(budget) => {
                let Some(&top) = digits.last() else {
                    return true;
                };
                let skipped = self
                    .greedy
                    .iter()
                    .take_while(|&&r| r < top)
                    .filter(|r| digits.binary_search(r).is_err())
                    .count();
                skipped as u64 <= *budget as u64
            }
        }
    }

    fn admits_with(&self, state: &SearchState, t: u32) -> bool {
        let mut digits = state.digits().members().to_vec();
        let pos = digits.partition_point(|&d| d < t);
        digits.insert(pos, t);
        self.admits(&digits)
    }

    fn children(&self, state: &SearchState) -> Vec<u32> {
        state
            .candidates()
            .iter()
            .copied()
            .filter(|&t| self.admits_with(state, t))
            .collect()
    }

    /// Optimistic score of everything reachable from `state`.
    fn bound(&self, state: &SearchState) -> f64 {
        let size = state.digits().len() + state.candidates().len();
        match self.cfg.objective {
            Objective::HarmonicEstimate => {
                let head: f64 = state
                    .digits()
                    .members()
                    .iter()
                    .chain(state.candidates())
                    .map(|&d| 1.0 / (d as f64 + 1.0))
                    .sum();
                head / (1.0 - size as f64 / self.base as f64)
            }
            Objective::LogDensity => (size as f64).ln() / (self.base as f64).ln(),
        }
    }

    fn is_maximal(&self, state: &SearchState) -> bool {
        let digits = state.digits();
        let top = digits.max_digit().unwrap_or(0);
        let mask: &DigitMask = state.mask();
        (0..top).all(|u| {
            digits.contains(u) || closes_progression(mask, self.base, self.cfg.k, u) || !self.admits_with(state, u)
        })
    }

    fn score(&self, digits: &ResidueSet) -> f64 {
        match self.cfg.objective {
            Objective::HarmonicEstimate => quick_estimate(digits),
            Objective::LogDensity => (digits.len() as f64).ln() / (self.base as f64).ln(),
        }
    }

    /// Deterministic list of independent subtrees.
    fn units(&self, root: SearchState) -> Result<Vec<SearchState>> {
        let mut units = Vec::new();
        self.split(root, SPLIT_DEPTH, &mut units)?;
        Ok(units)
    }

    fn split(&self, state: SearchState, depth: u32, units: &mut Vec<SearchState>) -> Result<()> {
        let kids = self.children(&state);
        if depth == 0 || kids.is_empty() || self.bound(&state) < self.cfg.threshold {
            units.push(state);
            return Ok(());
        }
        for t in kids {
            self.split(state.extend(t)?, depth - 1, units)?;
        }
        Ok(())
    }

    fn run_unit(&self, state: SearchState, budget: &Budget) -> Result<UnitResult> {
        let mut walk = Walk {
            search: self,
            budget,
            stats: SearchStats::default(),
            records: Vec::new(),
            best_size: 0,
        };
        walk.visit(state)?;
        if self.cfg.objective == Objective::LogDensity {
            // only the first set of the largest size found in this unit
            walk.records.truncate(1);
        }
        walk.stats.emitted = walk.records.len() as u64;
        Ok(UnitResult {
            records: walk.records,
            stats: walk.stats,
        })
    }
}

/// The greedy k-free-mod-b set obtained by scanning `0..=b-2`.
pub fn greedy_reference(base: u32, k: u32) -> Vec<u32> {
    let mut mask = DigitMask::new(base);
    let mut picked = Vec::new();
    for t in 0..base.saturating_sub(1) {
        if !closes_progression(&mask, base, k, t) {
            mask.insert(t);
            picked.push(t);
        }
    }
    picked
}

struct Budget {
    limit: u64,
    used: AtomicU64,
    exceeded: AtomicBool,
}

impl Budget {
    fn take(&self) -> Result<()> {
        if self.used.fetch_add(1, Ordering::Relaxed) >= self.limit || self.exceeded.load(Ordering::Relaxed) {
            self.exceeded.store(true, Ordering::Relaxed);
            return Err(Error::BudgetExceeded { budget: self.limit });
        }
        Ok(())
    }
}

struct Walk<'a, 'b> {
    search: &'a BaseSearch<'b>,
    budget: &'a Budget,
    stats: SearchStats,
    records: Vec<CandidateRecord>,
    best_size: usize,
}

impl Walk<'_, '_> {
    fn visit(&mut self, state: SearchState) -> Result<()> {
        self.budget.take()?;
        self.stats.nodes += 1;
        let search = self.search;
        let bound = search.bound(&state);
        let density = search.cfg.objective == Objective::LogDensity;
        let reachable = state.digits().len() + state.candidates().len();
        if bound < search.cfg.threshold || (density && reachable <= self.best_size) {
            self.stats.pruned += 1;
            return Ok(());
        }
        let kids = search.children(&state);
        if kids.is_empty() {
            let digits = state.digits();
            if search.score(digits) >= search.cfg.threshold && search.is_maximal(&state) {
                if density {
                    if digits.len() > self.best_size {
                        self.best_size = digits.len();
                        self.records.clear();
                        self.records.push(CandidateRecord::new(search.cfg.k, digits.clone()));
                    }
                } else {
                    self.records.push(CandidateRecord::new(search.cfg.k, digits.clone()));
                }
            }
            return Ok(());
        }
        for t in kids {
            self.visit(state.extend(t)?)?;
        }
        Ok(())
    }
}

/// Progress shared between worker threads.
struct Progress {
    checkpoint: Checkpoint,
    since_save: u64,
    completed_now: usize,
}

/// Runs the search over every base in the range. `on_base` receives each
/// base's records, in canonical order, once the base is finished.
pub fn run_search(
    cfg: &SearchConfig,
    opts: &RunOptions,
    mut on_base: impl FnMut(u32, &[CandidateRecord]) -> Result<()>,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let mut checkpoint = match &opts.checkpoint {
        Some(path) if opts.resume && path.exists() => {
            let cp = Checkpoint::load(path)?;
            if cp.config != *cfg {
                return Err(Error::Checkpoint(format!(
                    "{} was written for a different search configuration",
                    path.display()
                )));
            }
            cp
        }
        _ => Checkpoint::new(cfg, opts.started_at.clone()),
    };
    if checkpoint.started_at.is_none() {
        checkpoint.started_at = opts.started_at.clone();
    }
    let started_at = checkpoint.started_at.clone();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let budget = Budget {
        limit: cfg.node_budget,
        used: AtomicU64::new(0),
        exceeded: AtomicBool::new(false),
    };
    // nodes of finished units count against the budget on resume
    let resumed: u64 = checkpoint
        .units
        .values()
        .flat_map(|u| u.values())
        .map(|u| u.stats.nodes)
        .sum();
    budget.used.store(resumed, Ordering::Relaxed);

    let progress = Mutex::new(Progress {
        checkpoint,
        since_save: 0,
        completed_now: 0,
    });
    let stop = AtomicBool::new(false);
    let mut records = Vec::new();
    let mut stats = SearchStats::default();
    let mut complete = true;

    for base in cfg.bases.clone() {
        let search = BaseSearch::new(cfg, base);
        let units = match search.root()? {
            Some(root) => search.units(root)?,
            None => Vec::new(),
        };
        let done: BTreeMap<usize, UnitResult> = progress
            .lock()
            .unwrap()
            .checkpoint
            .units
            .get(&base)
            .cloned()
            .unwrap_or_default();

        let fresh: Vec<(usize, Result<Option<UnitResult>>)> = pool.install(|| {
            units
                .into_par_iter()
                .enumerate()
                .filter(|(i, _)| !done.contains_key(i))
                .map(|(i, unit)| {
                    if stop.load(Ordering::Relaxed) {
                        return (i, Ok(None));
                    }
                    let result = match search.run_unit(unit, &budget) {
                        Ok(r) => r,
                        Err(e) => return (i, Err(e)),
                    };
                    let mut p = progress.lock().unwrap();
                    if let Some(limit) = opts.max_units {
                        if p.completed_now >= limit {
                            stop.store(true, Ordering::Relaxed);
                            return (i, Ok(None));
                        }
                    }
                    p.completed_now += 1;
                    p.since_save += result.stats.nodes;
                    p.checkpoint.units.entry(base).or_default().insert(i, result.clone());
                    if let Some(path) = &opts.checkpoint {
                        if p.since_save >= opts.checkpoint_interval {
                            p.since_save = 0;
                            if let Err(e) = p.checkpoint.save(path) {
                                return (i, Err(e));
                            }
                        }
                    }
                    (i, Ok(Some(result)))
                })
                .collect()
        });

        let mut by_unit = done;
        for (i, result) in fresh {
            match result? {
                Some(r) => {
                    by_unit.insert(i, r);
                }
                None => complete = false,
            }
        }
        if let Some(path) = &opts.checkpoint {
            progress.lock().unwrap().checkpoint.save(path)?;
        }
        if !complete {
            break;
        }

        let mut base_records: Vec<CandidateRecord> = Vec::new();
        for unit in by_unit.values() {
            stats.absorb(&unit.stats);
            base_records.extend(unit.records.iter().cloned());
        }
        base_records.sort_by(|a, b| a.digits.cmp(&b.digits));
        if cfg.objective == Objective::LogDensity {
            // largest set, earliest in canonical order
            let best = base_records
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| a.digits.len().cmp(&b.digits.len()).then(j.cmp(i)))
                .map(|(i, _)| i);
            base_records = best.map(|i| vec![base_records.swap_remove(i)]).unwrap_or_default();
        }
        on_base(base, &base_records)?;
        records.extend(base_records);
    }
    stats.emitted = records.len() as u64;

    Ok(SearchOutcome {
        records,
        stats,
        complete,
        started_at,
    })
}

/// All maximal digit sets surviving the pruning rule, canonically ordered.
pub fn branch_and_bound(cfg: &SearchConfig) -> Result<Vec<CandidateRecord>> {
    let cfg = SearchConfig {
        objective: Objective::HarmonicEstimate,
        ..cfg.clone()
    };
    Ok(run_search(&cfg, &RunOptions::default(), |_, _| Ok(()))?.records)
}

/// The densest admissible digit set of each base, as at most one record per base.
pub fn density_search(cfg: &SearchConfig) -> Result<Vec<CandidateRecord>> {
    let cfg = SearchConfig {
        objective: Objective::LogDensity,
        ..cfg.clone()
    };
    Ok(run_search(&cfg, &RunOptions::default(), |_, _| Ok(()))?.records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rescored {
    /// Records with certified sums, largest first.
    pub ranked: Vec<CandidateRecord>,
    /// Records whose sum could not be certified.
    pub failures: Vec<(CandidateRecord, Error)>,
}

/// Certifies `H(K(S, b) + 1)` for each record and ranks by certified value.
pub fn rescore(records: Vec<CandidateRecord>, cfg: &PrecisionConfig) -> Rescored {
    let results: Vec<(CandidateRecord, Result<()>)> = records
        .into_par_iter()
        .map(|mut r| {
            let outcome = r.certify(cfg).map(|_| ());
            (r, outcome)
        })
        .collect();
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (record, outcome) in results {
        match outcome {
            Ok(()) => ranked.push(record),
            Err(e) => failures.push((record, e)),
        }
    }
    ranked.sort_by(|a, b| {
        let va = a.certified.map_or(f64::NEG_INFINITY, |c| c.value);
        let vb = b.certified.map_or(f64::NEG_INFINITY, |c| c.value);
        vb.total_cmp(&va).then_with(|| a.digits.cmp(&b.digits))
    });
    Rescored { ranked, failures }
}

/// `ln|S| / ln b` of a record's Kempner set.
pub fn record_density(record: &CandidateRecord) -> Result<f64> {
    Ok(log_density(&record.spec()?))
}
