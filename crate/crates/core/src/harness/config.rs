//! Flat TOML run configuration and universe construction from it.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::sweep::Dataset;
use crate::error::{Error, Result};
use crate::frequency::FrequencyScale;
use crate::german::{load_german, run_german_pipeline, GermanExperiment, TrainOptions};
use crate::simgen::{ExperimentConfig, Universe};

pub const DEFAULT_TRIALS: usize = 5;

/// Every key is optional; unset experiment fields take the dataset defaults.
///
/// ```toml
/// dataset = "german"
/// data = "data/german.data"
/// seed = 3
/// trials = 5
/// k = 15
/// ```
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<String>,
    /// German credit file.
    pub data: Option<PathBuf>,
    /// CSV of `item_id,score` replacing the scores policies rank by.
    pub scores: Option<PathBuf>,
    pub trials: Option<usize>,
    /// `"rate"` (count divided by the number of sets) or `"count"`.
    pub frequency_scale: Option<String>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub n_users: Option<usize>,
    pub m_items: Option<usize>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub n_popular: Option<usize>,
    pub popular_score: Option<f64>,
    pub beta_a: Option<f64>,
    pub beta_b: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load a file; relative paths inside it resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.data, &mut config.scores].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        self.dataset
            .as_deref()
            .map(Dataset::parse)
            .transpose()
            .map(|d| d.unwrap_or(Dataset::Synthetic))
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn frequency_scale(&self) -> Result<FrequencyScale> {
        self.frequency_scale
            .as_deref()
            .map(FrequencyScale::parse)
            .transpose()
            .map(Option::unwrap_or_default)
    }

    pub fn train_options(&self) -> TrainOptions {
        let d = TrainOptions::default();
        TrainOptions {
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            seed: self.seed(),
            ..d
        }
    }

    /// Dataset defaults overlaid with the keys that are set.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let base = match self.dataset()? {
            Dataset::Synthetic => ExperimentConfig::synthetic(),
            Dataset::German => ExperimentConfig::german(),
        };
        let config = ExperimentConfig {
            n_users: self.n_users.unwrap_or(base.n_users),
            m_items: self.m_items.unwrap_or(base.m_items),
            k: self.k.unwrap_or(base.k),
            ell: self.ell.unwrap_or(base.ell),
            n_popular: self.n_popular.unwrap_or(base.n_popular),
            popular_score: self.popular_score.unwrap_or(base.popular_score),
            beta_a: self.beta_a.unwrap_or(base.beta_a),
            beta_b: self.beta_b.unwrap_or(base.beta_b),
            seed: self.seed(),
        };
        config.validate()?;
        if self.trials == Some(0) {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(config)
    }
}

/// A built universe and, for the German dataset, the pipeline that made it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub universe: Universe,
    pub german: Option<GermanExperiment>,
}

/// Build the universe described by `config`, then apply external scores if
/// configured.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let experiment = config.experiment()?;
    let (universe, german) = match config.dataset()? {
        Dataset::Synthetic => (Universe::synthetic(&experiment)?, None),
        Dataset::German => {
            let path = config
                .data
                .as_ref()
                .ok_or_else(|| Error::Config("the german dataset needs a data path".into()))?;
            let records = load_german(path)?;
            let run = run_german_pipeline(&records, &experiment, &config.train_options())?;
            (run.universe.clone(), Some(run))
        }
    };
    let universe = match &config.scores {
        Some(path) => {
            let scores = load_external_scores(path, universe.config.m_items)?;
            universe.with_relevance(scores)?
        }
        None => universe,
    };
    Ok(Prepared { universe, german })
}

#[derive(Deserialize)]
struct ScoreRow {
    item_id: u32,
    score: f64,
}

/// Read per-item scores from a CSV with header `item_id,score`. Every item
/// `0..m_items` must appear exactly once.
pub fn load_external_scores(path: impl AsRef<Path>, m_items: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut scores = vec![None; m_items];
    for (i, row) in reader.deserialize::<ScoreRow>().enumerate() {
        let line = i + 2;
        let row = row?;
        let fail = |message: String| Err(Error::Parse { line, message });
        if !row.score.is_finite() {
            return fail(format!("score {} is not finite", row.score));
        }
        let Some(slot) = scores.get_mut(row.item_id as usize) else {
            return fail(format!("item {} outside 0..{m_items}", row.item_id));
        };
        if slot.replace(row.score).is_some() {
            return fail(format!("item {} listed twice", row.item_id));
        }
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("no score for item {i}"),
            })
        })
        .collect()
}
