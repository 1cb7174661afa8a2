//! Kempner sets free of k-term arithmetic progressions.
//!
//! A Kempner set `K(S, b)` holds the non-negative integers whose base-b digits
//! all lie in `S`. When `0 ∈ S` and `S` contains no k-term progression mod b,
//! `K(S, b)` contains no k-term arithmetic progression, which makes these sets
//! a cheap source of large k-free sets. This crate checks that condition,
//! computes harmonic sums of `K(S, b) + n` with rigorous error bounds, and
//! searches digit sets by branch and bound.

pub mod error;
pub mod harmonic;
pub mod kempner;
pub mod progressions;
pub mod results;
pub mod search;
pub mod tables;

pub use error::{Error, Result};
pub use harmonic::{
    depth_power_sums, harmonic_number, harmonic_sum_shifted, quick_estimate, shift_sum_decomposition, CertifiedSum,
    ErrorBudget, PowerSums, PrecisionConfig, ShiftDecomposition,
};
pub use kempner::{
    approximate_by_kempner, greedy_set, kfree_certificate, log_density, longest_ap, FiniteSet, KempnerSpec,
};
pub use progressions::{embedding_base, find_ap_witness, is_kfree_mod, ApWitness, ResidueSet, SearchState};
pub use results::{read_rows, ResultRow};
pub use search::{
    branch_and_bound, density_search, rescore, run_search, CandidateRecord, Checkpoint, Mode, Objective, RunOptions,
    SearchConfig, SearchOutcome, SearchStats,
};
