use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::frequency::{candidate_frequencies, FrequencyScale, FrequencyTable};
use crate::metrics::{content_quality, gini, t1ps, ImpressionLedger, ViewedPrefix};
use crate::ranking::{
    deterministic_rank, pl_prefix_probability, policy_weights, sample_ranking, RankingPolicy,
    SamplingWeight,
};
use crate::simgen::Universe;
use crate::streams::{stream, tag};

/// Addresses the random stream of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunKey {
    pub seed: u64,
    pub point: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub trial: usize,
    pub t1ps: f64,
    pub content_quality: f64,
    pub gini: f64,
}

/// Metrics of one policy at one hyperparameter point, averaged over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub policy: RankingPolicy,
    pub seed: u64,
    pub trials: usize,
    pub t1ps: f64,
    pub content_quality: f64,
    pub gini: f64,
    pub per_trial: Vec<TrialMetrics>,
    pub runtime_ms: f64,
}

fn standard_error(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

impl ResultRow {
    pub fn t1ps_standard_error(&self) -> f64 {
        standard_error(self.per_trial.iter().map(|t| t.t1ps))
    }

    pub fn content_quality_standard_error(&self) -> f64 {
        standard_error(self.per_trial.iter().map(|t| t.content_quality))
    }
}

/// A universe together with its candidate frequencies, computed once and
/// shared by every policy evaluated on it.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    universe: &'a Universe,
    freqs: FrequencyTable,
}

impl<'a> Experiment<'a> {
    pub fn new(universe: &'a Universe, scale: FrequencyScale) -> Result<Self> {
        let freqs = candidate_frequencies(&universe.sets)?.with_scale(scale);
        Ok(Self { universe, freqs })
    }

    pub fn universe(&self) -> &Universe {
        self.universe
    }

    pub fn frequencies(&self) -> &FrequencyTable {
        &self.freqs
    }

    fn weights(&self, policy: &RankingPolicy) -> Result<Vec<Option<Vec<SamplingWeight>>>> {
        self.universe
            .sets
            .par_iter()
            .map(|s| policy_weights(policy, s, &self.freqs))
            .collect()
    }

    /// What every user sees in one pass. User `u` in trial `t` draws from the
    /// stream `(seed, point, t, u)`.
    pub fn viewed(
        &self,
        policy: &RankingPolicy,
        key: RunKey,
        trial: usize,
    ) -> Result<Vec<ViewedPrefix>> {
        let weights = self.weights(policy)?;
        self.viewed_with(&weights, key, trial)
    }

    fn viewed_with(
        &self,
        weights: &[Option<Vec<SamplingWeight>>],
        key: RunKey,
        trial: usize,
    ) -> Result<Vec<ViewedPrefix>> {
        let ell = self.universe.config.ell;
        self.universe
            .sets
            .par_iter()
            .zip(weights)
            .map(|(set, w)| {
                let ranking = match w {
                    None => deterministic_rank(&set.scores)?,
                    Some(w) => {
                        let mut rng = stream(&[
                            key.seed,
                            tag::RANKING,
                            key.point,
                            trial as u64,
                            set.user.0 as u64,
                        ]);
                        sample_ranking(w, &mut rng)?
                    }
                };
                Ok(ViewedPrefix::from_ranking(set, &ranking, ell))
            })
            .collect()
    }

    /// Run `trials` independent passes (one for a deterministic policy) and
    /// average T1PS, content quality and Gini.
    pub fn run(&self, policy: &RankingPolicy, trials: usize, key: RunKey) -> Result<ResultRow> {
        let start = Instant::now();
        let trials = if policy.is_stochastic() {
            trials.max(1)
        } else {
            1
        };
        let weights = self.weights(policy)?;
        let u = self.universe;
        let per_trial = (0..trials)
            .map(|trial| {
                let viewed = self.viewed_with(&weights, key, trial)?;
                let ledger = ImpressionLedger::from_viewed(u.config.m_items, &viewed)?;
                Ok(TrialMetrics {
                    trial,
                    t1ps: t1ps(&ledger)?,
                    content_quality: content_quality(&viewed, &u.truth, u.config.n_users)?,
                    gini: gini(&ledger)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mean =
            |f: fn(&TrialMetrics) -> f64| per_trial.iter().map(f).sum::<f64>() / trials as f64;
        Ok(ResultRow {
            policy: *policy,
            seed: key.seed,
            trials,
            t1ps: mean(|t| t.t1ps),
            content_quality: mean(|t| t.content_quality),
            gini: mean(|t| t.gini),
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            per_trial,
        })
    }

    /// Fraction of users whose viewed prefix under `policy` (trial 0) matches
    /// the deterministic one position by position.
    pub fn prefix_agreement(&self, policy: &RankingPolicy, key: RunKey) -> Result<f64> {
        let det = self.viewed(&RankingPolicy::Deterministic, key, 0)?;
        let other = self.viewed(policy, key, 0)?;
        let same = det
            .iter()
            .zip(&other)
            .filter(|(a, b)| a.items == b.items)
            .count();
        Ok(same as f64 / det.len().max(1) as f64)
    }

    /// Probability, averaged over users, that `policy` shows a user exactly
    /// the deterministic viewed prefix. Computed in closed form.
    pub fn expected_prefix_agreement(&self, policy: &RankingPolicy) -> Result<f64> {
        let ell = self.universe.config.ell;
        let weights = self.weights(policy)?;
        let probs = self
            .universe
            .sets
            .par_iter()
            .zip(&weights)
            .map(|(set, w)| match w {
                None => Ok(1.0),
                Some(w) => pl_prefix_probability(w, deterministic_rank(&set.scores)?.prefix(ell)),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(probs.iter().sum::<f64>() / probs.len().max(1) as f64)
    }
}

/// Count candidate frequencies for `universe` and evaluate one policy on it.
pub fn run_experiment(
    universe: &Universe,
    policy: &RankingPolicy,
    trials: usize,
    scale: FrequencyScale,
    key: RunKey,
) -> Result<ResultRow> {
    Experiment::new(universe, scale)?.run(policy, trials, key)
}
