//! Exposure simulation for two-stage recommenders.
//!
//! A first stage hands every user a small candidate set; a second stage ranks
//! it. When some items show up in far more candidate sets than others, even a
//! uniformly random second stage concentrates exposure on those items. This
//! crate simulates that pipeline end to end:
//!
//! - [`ranking`]: per-policy sampling weights and Plackett-Luce sampling,
//!   including Plackett-Luce with inverse candidate frequency weights
//!   (PL-ICFW), plus an exact permutation-probability oracle.
//! - [`frequency`]: how many candidate sets each item (or group) appears in.
//! - [`simgen`]: synthetic universes with a small, heavily over-sampled minority.
//! - [`german`]: the German credit universe with a from-scratch logistic scorer.
//! - [`metrics`]: T1PS, Gini, content quality, expected impressions and an
//!   exhaustive equal-exposure feasibility check.
//! - [`harness`]: experiments, hyperparameter sweeps, CSV output and the toy
//!   demonstration.
//! - [`cli`]: the `exposim` command line.

#![forbid(unsafe_code)]

pub mod cli;
pub mod error;
pub mod frequency;
pub mod german;
pub mod harness;
pub mod metrics;
pub mod ranking;
pub mod simgen;
pub mod streams;

pub use error::{Error, Result};
pub use frequency::{
    candidate_frequencies, group_frequencies, FrequencyScale, FrequencyTable, GroupId,
};
pub use ranking::{
    deterministic_rank, exact_pl_probability, icfw_weights, rank_with_policy, sample_ranking,
    scaled_pl_weights, Ranking, RankingPolicy, SamplingWeight,
};
pub use simgen::{CandidateSet, ExperimentConfig, Universe};

use std::fmt;

/// Opaque identifier of a ranked item (a producer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

/// Opaque identifier of a ranking requester (a consumer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
