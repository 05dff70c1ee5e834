//! Synthetic two-stage universes.
//!
//! Every item carries a candidate score that controls how often the first
//! stage picks it. A handful of items get a large score and end up in most
//! candidate sets; the rest draw from a Beta law with most mass near zero.
//! Candidate sets are drawn by sequential proportional sampling without
//! replacement.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ranking::{sample_ranking, weights_from_values, SamplingWeight};
use crate::streams::{stream, tag};
use crate::{ItemId, UserId};

/// Constant in the synthetic ground truth `max(0, 5 - c + x)`.
pub const RELEVANCE_OFFSET: f64 = 5.0;

/// One user's first-stage output: distinct items with the relevance scores the
/// second stage ranks by.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub user: UserId,
    pub items: Vec<ItemId>,
    pub scores: Vec<f64>,
}

impl CandidateSet {
    pub fn new(user: UserId, items: Vec<ItemId>, scores: Vec<f64>) -> Result<Self> {
        if items.len() != scores.len() {
            return Err(Error::invalid(format!(
                "candidate set of user {user}: {} items but {} scores",
                items.len(),
                scores.len()
            )));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = items.iter().find(|i| !seen.insert(**i)) {
            return Err(Error::invalid(format!(
                "candidate set of user {user} repeats item {dup}"
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!(
                "candidate set of user {user} has score {bad}"
            )));
        }
        Ok(Self {
            user,
            items,
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Shape of a simulated universe.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_users: usize,
    pub m_items: usize,
    /// Candidate-set size.
    pub k: usize,
    /// Number of leading positions each user views.
    pub ell: usize,
    pub n_popular: usize,
    pub popular_score: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::synthetic()
    }
}

impl ExperimentConfig {
    /// 2000 users, 1000 items, sets of 40, top 10 viewed.
    pub fn synthetic() -> Self {
        Self {
            n_users: 2000,
            m_items: 1000,
            k: 40,
            ell: 10,
            n_popular: 10,
            popular_score: 5.0,
            beta_a: 1.0,
            beta_b: 10.0,
            seed: 0,
        }
    }

    /// 2000 users, 200 credit applicants, sets of 15, top 5 viewed.
    pub fn german() -> Self {
        Self {
            m_items: 200,
            k: 15,
            ell: 5,
            ..Self::synthetic()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_users == 0 || self.m_items == 0 || self.k == 0 || self.ell == 0 {
            return fail("n_users, m_items, k and ell must all be positive".into());
        }
        if self.ell > self.k || self.k > self.m_items {
            return fail(format!(
                "need ell <= k <= m_items, got ell={} k={} m_items={}",
                self.ell, self.k, self.m_items
            ));
        }
        if self.n_popular > self.m_items {
            return fail(format!(
                "n_popular={} exceeds m_items={}",
                self.n_popular, self.m_items
            ));
        }
        if !(self.popular_score.is_finite() && self.popular_score > 0.0) {
            return fail(format!(
                "popular_score must be positive, got {}",
                self.popular_score
            ));
        }
        if !(self.beta_a > 0.0
            && self.beta_b > 0.0
            && self.beta_a.is_finite()
            && self.beta_b.is_finite())
        {
            return fail(format!(
                "beta shape parameters must be positive, got ({}, {})",
                self.beta_a, self.beta_b
            ));
        }
        Ok(())
    }
}

/// Candidate scores: `popular_score` for the `boosted` items, Beta draws for
/// everyone else (in index order).
pub fn gen_candidate_scores<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    boosted: &[ItemId],
    rng: &mut R,
) -> Result<Vec<f64>> {
    config.validate()?;
    if boosted.len() != config.n_popular {
        return Err(Error::invalid(format!(
            "expected {} boosted items, got {}",
            config.n_popular,
            boosted.len()
        )));
    }
    let mut is_boosted = vec![false; config.m_items];
    for b in boosted {
        match is_boosted.get_mut(b.index()) {
            Some(flag) if !*flag => *flag = true,
            Some(_) => return Err(Error::invalid(format!("item {b} boosted twice"))),
            None => return Err(Error::invalid(format!("boosted item {b} is out of range"))),
        }
    }
    let beta = Beta::new(config.beta_a, config.beta_b)
        .map_err(|e| Error::Config(format!("beta law: {e}")))?;
    Ok(is_boosted
        .into_iter()
        .map(|b| {
            if b {
                config.popular_score
            } else {
                // the open support keeps every score strictly positive
                loop {
                    let x: f64 = beta.sample(rng);
                    if x > 0.0 && x < 1.0 {
                        break x;
                    }
                }
            }
        })
        .collect())
}

/// Draw `k` distinct items, each step picking among the remaining items with
/// probability proportional to their weight.
pub fn sample_candidate_set<R: Rng + ?Sized>(
    weights: &[SamplingWeight],
    k: usize,
    rng: &mut R,
) -> Result<Vec<ItemId>> {
    if k > weights.len() {
        return Err(Error::invalid(format!(
            "cannot draw {k} candidates from {} items",
            weights.len()
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let ranking = sample_ranking(weights, rng)?;
    Ok(ranking
        .prefix(k)
        .iter()
        .map(|&i| ItemId(i as u32))
        .collect())
}

/// `max(0, 5 - c + x)` with standard normal noise `x`.
pub fn synthetic_relevance(candidate_score: f64, noise: f64) -> f64 {
    (RELEVANCE_OFFSET - candidate_score + noise).max(0.0)
}

/// Ground-truth relevance for every item, anti-correlated with candidate score.
pub fn gen_relevance_synthetic<R: Rng + ?Sized>(candidate_scores: &[f64], rng: &mut R) -> Vec<f64> {
    candidate_scores
        .iter()
        .map(|&c| {
            let x: f64 = rng.sample(StandardNormal);
            synthetic_relevance(c, x)
        })
        .collect()
}

/// A complete simulated world: items, their scores, and every user's
/// candidate set. Relevance and truth are constant across users.
#[derive(Debug, Clone)]
pub struct Universe {
    pub config: ExperimentConfig,
    pub candidate_scores: Vec<f64>,
    pub boosted: Vec<ItemId>,
    /// Scores the ranking policies see.
    pub relevance: Vec<f64>,
    /// Ground truth used for content quality.
    pub truth: Vec<f64>,
    pub sets: Vec<CandidateSet>,
}

impl Universe {
    /// Synthetic universe; items `0..n_popular` are the boosted ones.
    pub fn synthetic(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let boosted: Vec<ItemId> = (0..config.n_popular as u32).map(ItemId).collect();
        let scores = gen_candidate_scores(
            config,
            &boosted,
            &mut stream(&[config.seed, tag::CANDIDATE_SCORES]),
        )?;
        let relevance =
            gen_relevance_synthetic(&scores, &mut stream(&[config.seed, tag::RELEVANCE]));
        Self::assemble(config, scores, boosted, relevance.clone(), relevance)
    }

    /// Draw candidate sets for the given item attributes and bundle them.
    pub fn assemble(
        config: &ExperimentConfig,
        candidate_scores: Vec<f64>,
        boosted: Vec<ItemId>,
        relevance: Vec<f64>,
        truth: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let m = config.m_items;
        if candidate_scores.len() != m || relevance.len() != m || truth.len() != m {
            return Err(Error::invalid(format!(
                "universe of {m} items needs {m} candidate scores, relevance scores and truths"
            )));
        }
        let weights = weights_from_values(&candidate_scores)?;
        let sets = (0..config.n_users)
            .into_par_iter()
            .map(|u| {
                let mut rng = stream(&[config.seed, tag::CANDIDATE_SETS, u as u64]);
                let items = sample_candidate_set(&weights, config.k, &mut rng)?;
                let scores = items.iter().map(|i| relevance[i.index()]).collect();
                CandidateSet::new(UserId(u as u32), items, scores)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            candidate_scores,
            boosted,
            relevance,
            truth,
            sets,
        })
    }

    /// Replace the scores policies rank by (e.g. with externally learned
    /// ones), keeping candidate sets and ground truth.
    pub fn with_relevance(mut self, relevance: Vec<f64>) -> Result<Self> {
        if relevance.len() != self.config.m_items {
            return Err(Error::invalid(format!(
                "expected {} relevance scores, got {}",
                self.config.m_items,
                relevance.len()
            )));
        }
        for set in &mut self.sets {
            set.scores = set.items.iter().map(|i| relevance[i.index()]).collect();
        }
        self.relevance = relevance;
        Ok(self)
    }
}
