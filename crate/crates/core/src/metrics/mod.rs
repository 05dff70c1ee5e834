//! System-level exposure and consumer-side quality metrics.

mod feasibility;

pub use feasibility::{equal_exposure_feasible, Feasibility, MAX_ASSIGNMENTS};

use rand::Rng;

use crate::error::{Error, Result};
use crate::frequency::FrequencyTable;
use crate::ranking::{deterministic_rank, policy_weights, sample_ranking, Ranking, RankingPolicy};
use crate::simgen::CandidateSet;
use crate::{ItemId, UserId};

/// Impressions per item over a universe of `len()` items; items never viewed
/// hold zero and still count towards the population.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpressionLedger {
    counts: Vec<f64>,
}

impl ImpressionLedger {
    pub fn new(m_items: usize) -> Self {
        Self {
            counts: vec![0.0; m_items],
        }
    }

    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(format!(
                "impression counts must be >= 0, got {bad}"
            )));
        }
        Ok(Self { counts })
    }

    /// Realized ledger from viewed prefixes.
    pub fn from_viewed(m_items: usize, viewed: &[ViewedPrefix]) -> Result<Self> {
        let mut ledger = Self::new(m_items);
        for v in viewed {
            for &item in &v.items {
                ledger.add(item, 1.0)?;
            }
        }
        Ok(ledger)
    }

    pub fn add(&mut self, item: ItemId, amount: f64) -> Result<()> {
        let m = self.counts.len();
        let slot = self.counts.get_mut(item.index()).ok_or_else(|| {
            Error::invalid(format!("item {item} outside a universe of {m} items"))
        })?;
        *slot += amount;
        Ok(())
    }

    pub fn get(&self, item: ItemId) -> f64 {
        self.counts.get(item.index()).copied().unwrap_or(0.0)
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn scale(&mut self, factor: f64) {
        self.counts.iter_mut().for_each(|c| *c *= factor);
    }
}

/// The leading positions of one user's ranking, i.e. what the user saw.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewedPrefix {
    pub user: UserId,
    pub items: Vec<ItemId>,
}

impl ViewedPrefix {
    pub fn from_ranking(set: &CandidateSet, ranking: &Ranking, ell: usize) -> Self {
        Self {
            user: set.user,
            items: ranking.prefix(ell).iter().map(|&p| set.items[p]).collect(),
        }
    }
}

/// Number of items in the top 1% of a population of `m` (rounded up).
pub fn top_one_percent_size(m_items: usize) -> usize {
    m_items.div_ceil(100)
}

/// Percentage of all impressions captured by the top 1% of items.
pub fn t1ps(ledger: &ImpressionLedger) -> Result<f64> {
    let total = ledger.total();
    if total <= 0.0 {
        return Err(Error::UndefinedMetric(
            "T1PS of a ledger with no impressions".into(),
        ));
    }
    let mut sorted = ledger.counts.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let top: f64 = sorted[..top_one_percent_size(sorted.len())].iter().sum();
    Ok(100.0 * top / total)
}

/// Gini coefficient of the impression counts over all items.
pub fn gini(ledger: &ImpressionLedger) -> Result<f64> {
    let total = ledger.total();
    if total <= 0.0 {
        return Err(Error::UndefinedMetric(
            "Gini of a ledger with no impressions".into(),
        ));
    }
    let mut sorted = ledger.counts.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let ranked: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i + 1) as f64 * x)
        .sum();
    Ok((2.0 * ranked / (m * total) - (m + 1.0) / m).max(0.0))
}

/// Total ground-truth relevance of everything viewed, per requesting user.
/// Repeat views of an item by different users each count.
pub fn content_quality(viewed: &[ViewedPrefix], truth: &[f64], n_users: usize) -> Result<f64> {
    if n_users == 0 {
        return Err(Error::invalid("content quality needs at least one user"));
    }
    let mut sum = 0.0;
    for v in viewed {
        for item in &v.items {
            let t = truth
                .get(item.index())
                .copied()
                .filter(|t| t.is_finite())
                .ok_or_else(|| Error::invalid(format!("no ground truth for item {item}")))?;
            sum += t;
        }
    }
    Ok(sum / n_users as f64)
}

/// Closed-form expectation under uniformly random ranking: an item in a set
/// of size `s` is viewed with probability `min(ell, s) / s`.
pub fn randomized_expected_impressions(
    sets: &[CandidateSet],
    m_items: usize,
    ell: usize,
) -> Result<ImpressionLedger> {
    let mut ledger = ImpressionLedger::new(m_items);
    for set in sets {
        if set.is_empty() {
            continue;
        }
        let p = ell.min(set.len()) as f64 / set.len() as f64;
        for &item in &set.items {
            ledger.add(item, p)?;
        }
    }
    Ok(ledger)
}

/// Monte Carlo expected impressions: the average realized ledger over
/// `n_trials` full passes. Deterministic policies take a single pass.
pub fn expected_impressions<R: Rng + ?Sized>(
    policy: &RankingPolicy,
    sets: &[CandidateSet],
    freqs: &FrequencyTable,
    m_items: usize,
    ell: usize,
    n_trials: usize,
    rng: &mut R,
) -> Result<ImpressionLedger> {
    let mut ledger = ImpressionLedger::new(m_items);
    let weights = sets
        .iter()
        .map(|s| policy_weights(policy, s, freqs))
        .collect::<Result<Vec<_>>>()?;
    let trials = if policy.is_stochastic() {
        if n_trials == 0 {
            return Err(Error::invalid(
                "stochastic policies need at least one trial",
            ));
        }
        n_trials
    } else {
        1
    };
    for _ in 0..trials {
        for (set, w) in sets.iter().zip(&weights) {
            let ranking = match w {
                Some(w) => sample_ranking(w, rng)?,
                None => deterministic_rank(&set.scores)?,
            };
            for &p in ranking.prefix(ell) {
                ledger.add(set.items[p], 1.0)?;
            }
        }
    }
    ledger.scale(1.0 / trials as f64);
    Ok(ledger)
}
