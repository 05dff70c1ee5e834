//! Candidate-set appearance counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::simgen::CandidateSet;
use crate::ItemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub u32);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// How a raw appearance count is turned into the frequency the inverse
/// frequency weights consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyScale {
    /// Fraction of candidate sets containing the item, `W / n`.
    #[default]
    Rate,
    /// The raw count `W`.
    Count,
}

impl FrequencyScale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rate" => Ok(FrequencyScale::Rate),
            "count" => Ok(FrequencyScale::Count),
            other => Err(Error::Config(format!(
                "unknown frequency scale {other:?} (expected \"rate\" or \"count\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Groups {
    group_of: BTreeMap<ItemId, GroupId>,
    counts: BTreeMap<GroupId, u64>,
}

/// Number of candidate sets each item appears in, computed once over the whole
/// batch. Items that appear in no set are absent.
///
/// Once [`group_frequencies`] has attached a grouping, [`Self::frequency_of`]
/// reports the frequency of the item's group instead of the item's own.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    counts: BTreeMap<ItemId, u64>,
    n_sets: usize,
    groups: Option<Groups>,
    scale: FrequencyScale,
}

impl FrequencyTable {
    pub fn count(&self, item: ItemId) -> Option<u64> {
        self.counts.get(&item).copied()
    }

    pub fn counts(&self) -> &BTreeMap<ItemId, u64> {
        &self.counts
    }

    pub fn n_sets(&self) -> usize {
        self.n_sets
    }

    /// Sum of all counts, i.e. the number of filled candidate slots.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn scale(&self) -> FrequencyScale {
        self.scale
    }

    pub fn with_scale(mut self, scale: FrequencyScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn group_counts(&self) -> Option<&BTreeMap<GroupId, u64>> {
        self.groups.as_ref().map(|g| &g.counts)
    }

    pub fn group_of(&self, item: ItemId) -> Option<GroupId> {
        self.groups.as_ref()?.group_of.get(&item).copied()
    }

    /// Count used for weighting: the group count when groups are attached,
    /// otherwise the item count.
    pub fn effective_count(&self, item: ItemId) -> Option<u64> {
        match &self.groups {
            Some(g) => g.counts.get(g.group_of.get(&item)?).copied(),
            None => self.count(item),
        }
    }

    /// Frequency fed to the inverse-frequency weights, per [`FrequencyScale`].
    pub fn frequency_of(&self, item: ItemId) -> Option<f64> {
        let raw = self.effective_count(item)? as f64;
        Some(match self.scale {
            FrequencyScale::Count => raw,
            FrequencyScale::Rate => raw / self.n_sets.max(1) as f64,
        })
    }
}

/// Count, for every item, the number of candidate sets containing it.
pub fn candidate_frequencies(sets: &[CandidateSet]) -> Result<FrequencyTable> {
    let mut counts = BTreeMap::new();
    for set in sets {
        let mut seen = BTreeSet::new();
        for &item in &set.items {
            if !seen.insert(item) {
                return Err(Error::invalid(format!(
                    "item {item} appears twice in the candidate set of user {}",
                    set.user
                )));
            }
            *counts.entry(item).or_insert(0u64) += 1;
        }
    }
    Ok(FrequencyTable {
        counts,
        n_sets: sets.len(),
        groups: None,
        scale: FrequencyScale::default(),
    })
}

/// Attach a grouping and aggregate counts per group.
pub fn group_frequencies(
    table: &FrequencyTable,
    group_of: impl Fn(ItemId) -> Option<GroupId>,
) -> Result<FrequencyTable> {
    let mut mapping = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for (&item, &c) in &table.counts {
        let g =
            group_of(item).ok_or_else(|| Error::invalid(format!("item {item} has no group")))?;
        mapping.insert(item, g);
        *counts.entry(g).or_insert(0u64) += c;
    }
    Ok(FrequencyTable {
        groups: Some(Groups {
            group_of: mapping,
            counts,
        }),
        ..table.clone()
    })
}
