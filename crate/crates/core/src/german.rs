//! German credit universe.
//!
//! Loads the UCI `german.data` file, encodes nine applicant attributes into a
//! 29-dimensional feature vector, fits a plain logistic regression, and turns
//! a random sample of applicants into a ranking universe. Ten applicants from
//! the low end of the learned relevance order (ascending ranks 51 to 60) get
//! the large candidate score and so flood the candidate sets.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simgen::{gen_candidate_scores, ExperimentConfig, Universe};
use crate::streams::{stream, tag};
use crate::ItemId;

/// Records in the canonical file.
pub const GERMAN_RECORDS: usize = 1000;
/// Attribute columns per record, not counting the label.
pub const ATTRIBUTES: usize = 20;
pub const FEATURE_DIM: usize = 29;

/// Ascending learned-relevance positions (0-based) that receive the boost.
pub const BOOST_POSITIONS: std::ops::Range<usize> = 50..60;

const COL_CHECKING: usize = 0;
const COL_DURATION: usize = 1;
const COL_PURPOSE: usize = 3;
const COL_AMOUNT: usize = 4;
const COL_SAVINGS: usize = 5;
const COL_PERSONAL: usize = 8;
const COL_HOUSING: usize = 14;
const COL_AGE: usize = 12;
const COL_JOB: usize = 16;

/// One applicant as it appears in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditRecord {
    /// 0-based position in the source file.
    pub row: usize,
    pub attributes: Vec<String>,
    /// Good credit risk (raw label 1).
    pub good: bool,
}

impl CreditRecord {
    pub fn label(&self) -> f64 {
        if self.good {
            1.0
        } else {
            0.0
        }
    }

    fn numeric(&self, col: usize) -> Result<f64> {
        self.attributes[col]
            .parse::<f64>()
            .map_err(|_| Error::Parse {
                line: self.row + 1,
                message: format!(
                    "column {} is not numeric: {:?}",
                    col + 1,
                    self.attributes[col]
                ),
            })
    }
}

/// Parse records from whitespace-separated text. `expected` enforces a row
/// count.
pub fn parse_german<R: Read>(reader: R, expected: Option<usize>) -> Result<Vec<CreditRecord>> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != ATTRIBUTES + 1 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} fields, found {}", ATTRIBUTES + 1, fields.len()),
            });
        }
        let good = match fields[ATTRIBUTES] {
            "1" => true,
            "2" => false,
            other => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("label must be 1 or 2, found {other:?}"),
                })
            }
        };
        let record = CreditRecord {
            row: records.len(),
            attributes: fields[..ATTRIBUTES].iter().map(|s| s.to_string()).collect(),
            good,
        };
        for col in [COL_DURATION, COL_AMOUNT, COL_AGE] {
            record.numeric(col).map_err(|_| Error::Parse {
                line: i + 1,
                message: format!(
                    "column {} is not numeric: {:?}",
                    col + 1,
                    record.attributes[col]
                ),
            })?;
        }
        records.push(record);
    }
    if let Some(n) = expected {
        if records.len() != n {
            return Err(Error::Parse {
                line: records.len() + 1,
                message: format!("expected {n} records, found {}", records.len()),
            });
        }
    }
    Ok(records)
}

/// Load the canonical 1000-row file.
pub fn load_german(path: impl AsRef<Path>) -> Result<Vec<CreditRecord>> {
    let file = File::open(path.as_ref()).map_err(|e| Error::file(path.as_ref(), e))?;
    parse_german(file, Some(GERMAN_RECORDS))
}

struct Block {
    name: &'static str,
    column: usize,
    levels: &'static [(&'static str, &'static [&'static str])],
}

// The savings and checking "unknown / none" codes stay separate levels.
const BLOCKS: &[Block] = &[
    Block {
        name: "sex",
        column: COL_PERSONAL,
        levels: &[
            ("male", &["A91", "A93", "A94"]),
            ("female", &["A92", "A95"]),
        ],
    },
    Block {
        name: "job",
        column: COL_JOB,
        levels: &[
            ("unskilled_nonresident", &["A171"]),
            ("unskilled_resident", &["A172"]),
            ("skilled", &["A173"]),
            ("highly_skilled", &["A174"]),
        ],
    },
    Block {
        name: "housing",
        column: COL_HOUSING,
        levels: &[("rent", &["A151"]), ("own", &["A152"]), ("free", &["A153"])],
    },
    Block {
        name: "savings",
        column: COL_SAVINGS,
        levels: &[
            ("little", &["A61"]),
            ("moderate", &["A62"]),
            ("quite_rich", &["A63"]),
            ("rich", &["A64"]),
            ("unknown", &["A65"]),
        ],
    },
    Block {
        name: "checking",
        column: COL_CHECKING,
        levels: &[
            ("little", &["A11"]),
            ("moderate", &["A12"]),
            ("rich", &["A13"]),
            ("none", &["A14"]),
        ],
    },
    Block {
        name: "purpose",
        column: COL_PURPOSE,
        levels: &[
            ("car", &["A40", "A41"]),
            ("furniture_equipment", &["A42"]),
            ("radio_tv", &["A43"]),
            ("domestic_appliances", &["A44"]),
            ("repairs", &["A45"]),
            ("education", &["A46", "A48"]),
            ("business", &["A49"]),
            ("vacation_other", &["A47", "A410"]),
        ],
    },
];

const NUMERIC: &[(&str, usize)] = &[
    ("age", COL_AGE),
    ("credit_amount", COL_AMOUNT),
    ("duration", COL_DURATION),
];

/// Names of the 29 encoded features, in order.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = NUMERIC.iter().map(|(n, _)| n.to_string()).collect();
    for block in BLOCKS {
        names.extend(
            block
                .levels
                .iter()
                .map(|(level, _)| format!("{}={level}", block.name)),
        );
    }
    names
}

pub type FeatureVector = [f64; FEATURE_DIM];

/// Encode records: standardized age, amount and duration (full-sample mean,
/// population standard deviation; constant columns become 0) followed by one-hot sex, job, housing,
/// savings, checking and purpose. Returns features and 0/1 labels.
pub fn preprocess(records: &[CreditRecord]) -> Result<(Vec<FeatureVector>, Vec<f64>)> {
    if records.is_empty() {
        return Err(Error::invalid("no records to preprocess"));
    }
    let n = records.len() as f64;
    let mut stats = Vec::with_capacity(NUMERIC.len());
    for &(_, col) in NUMERIC {
        let values = records
            .iter()
            .map(|r| r.numeric(col))
            .collect::<Result<Vec<_>>>()?;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        // a constant column encodes to zero
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        stats.push((mean, sd));
    }

    let mut features = Vec::with_capacity(records.len());
    for r in records {
        let mut x = [0.0; FEATURE_DIM];
        for (j, (&(_, col), &(mean, sd))) in NUMERIC.iter().zip(&stats).enumerate() {
            x[j] = (r.numeric(col)? - mean) / sd;
        }
        let mut offset = NUMERIC.len();
        for block in BLOCKS {
            let code = r.attributes[block.column].as_str();
            let level = block
                .levels
                .iter()
                .position(|(_, codes)| codes.contains(&code))
                .ok_or_else(|| Error::Parse {
                    line: r.row + 1,
                    message: format!("unknown {} code {code:?}", block.name),
                })?;
            x[offset + level] = 1.0;
            offset += block.levels.len();
        }
        debug_assert_eq!(offset, FEATURE_DIM);
        features.push(x);
    }
    Ok((features, records.iter().map(CreditRecord::label).collect()))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean cross-entropy and its gradient `(d/dweights, d/dbias)`.
    pub fn loss_and_gradient<F: AsRef<[f64]>>(
        &self,
        features: &[F],
        labels: &[f64],
    ) -> (f64, Vec<f64>, f64) {
        let n = features.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.dim()];
        let mut grad_b = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let x = x.as_ref();
            let z = self.logit(x);
            loss += softplus(z) - y * z;
            let residual = sigmoid(z) - y;
            for (g, v) in grad.iter_mut().zip(x) {
                *g += residual * v;
            }
            grad_b += residual;
        }
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad, grad_b / n)
    }

    pub fn accuracy<F: AsRef<[f64]>>(&self, features: &[F], labels: &[f64]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(x, &y)| (self.probability(x.as_ref()) >= 0.5) == (y >= 0.5))
            .count();
        hits as f64 / features.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Half-width of the uniform initial weights; 0 starts from all zeros.
    pub init_scale: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.1,
            seed: 0,
            init_scale: 0.0,
        }
    }
}

/// Fit a logistic regression by full-batch gradient descent on mean
/// cross-entropy. Returns the model and the loss before every epoch plus the
/// final loss.
pub fn fit_logistic<F: AsRef<[f64]>>(
    features: &[F],
    labels: &[f64],
    options: &TrainOptions,
) -> Result<(LinearModel, Vec<f64>)> {
    if features.is_empty() {
        return Err(Error::invalid("no training data"));
    }
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].as_ref().len();
    if features.iter().any(|x| x.as_ref().len() != dim) {
        return Err(Error::invalid("feature rows have different lengths"));
    }
    if !(options.learning_rate.is_finite() && options.learning_rate > 0.0) {
        return Err(Error::invalid(format!(
            "learning rate must be positive, got {}",
            options.learning_rate
        )));
    }
    let mut model = LinearModel::zeros(dim);
    if options.init_scale > 0.0 {
        let mut rng = stream(&[options.seed, tag::TRAINING]);
        for w in &mut model.weights {
            *w = rng.random_range(-options.init_scale..=options.init_scale);
        }
    }
    let mut losses = Vec::with_capacity(options.epochs + 1);
    for epoch in 0..=options.epochs {
        let (loss, grad, grad_b) = model.loss_and_gradient(features, labels);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss became {loss} at epoch {epoch}"
            )));
        }
        losses.push(loss);
        if epoch == options.epochs {
            break;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= options.learning_rate * g;
        }
        model.bias -= options.learning_rate * grad_b;
    }
    Ok((model, losses))
}

pub fn train_linear<F: AsRef<[f64]>>(
    features: &[F],
    labels: &[f64],
    options: &TrainOptions,
) -> Result<LinearModel> {
    fit_logistic(features, labels, options).map(|(m, _)| m)
}

/// Sigmoid scores in (0, 1) for every row.
pub fn predict_relevance<F: AsRef<[f64]>>(model: &LinearModel, features: &[F]) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|x| {
            let x = x.as_ref();
            if x.len() != model.dim() {
                return Err(Error::invalid(format!(
                    "feature row has {} entries, model expects {}",
                    x.len(),
                    model.dim()
                )));
            }
            Ok(model.probability(x))
        })
        .collect()
}

/// Items at ascending-relevance positions 51..=60 (ties broken by index).
pub fn boosted_by_relevance_rank(relevance: &[f64]) -> Result<Vec<ItemId>> {
    if relevance.len() < BOOST_POSITIONS.end {
        return Err(Error::invalid(format!(
            "need at least {} candidates to boost ranks 51-60, got {}",
            BOOST_POSITIONS.end,
            relevance.len()
        )));
    }
    let mut order: Vec<usize> = (0..relevance.len()).collect();
    order.sort_by(|&a, &b| relevance[a].total_cmp(&relevance[b]));
    let mut boosted: Vec<ItemId> = order[BOOST_POSITIONS]
        .iter()
        .map(|&i| ItemId(i as u32))
        .collect();
    boosted.sort();
    Ok(boosted)
}

/// Universe over the selected applicants: policies rank by learned relevance,
/// content quality uses the binary labels.
pub fn build_german_universe(
    relevance: &[f64],
    labels: &[f64],
    config: &ExperimentConfig,
) -> Result<Universe> {
    config.validate()?;
    if relevance.len() != config.m_items || labels.len() != config.m_items {
        return Err(Error::invalid(format!(
            "config expects {} candidates, got {} scores and {} labels",
            config.m_items,
            relevance.len(),
            labels.len()
        )));
    }
    let boosted = boosted_by_relevance_rank(relevance)?;
    if config.n_popular != boosted.len() {
        return Err(Error::Config(format!(
            "the German universe boosts exactly {} candidates, config says n_popular = {}",
            boosted.len(),
            config.n_popular
        )));
    }
    let scores = gen_candidate_scores(
        config,
        &boosted,
        &mut stream(&[config.seed, tag::CANDIDATE_SCORES]),
    )?;
    Universe::assemble(config, scores, boosted, relevance.to_vec(), labels.to_vec())
}

/// Everything the German pipeline produces.
#[derive(Debug, Clone)]
pub struct GermanExperiment {
    pub model: LinearModel,
    pub training_accuracy: f64,
    /// Source row of each universe item, indexed by item id.
    pub source_rows: Vec<usize>,
    pub universe: Universe,
}

/// Encode, train on all records, score, sample `m_items` applicants and build
/// the universe.
pub fn run_german_pipeline(
    records: &[CreditRecord],
    config: &ExperimentConfig,
    options: &TrainOptions,
) -> Result<GermanExperiment> {
    config.validate()?;
    if config.m_items > records.len() {
        return Err(Error::Config(format!(
            "cannot select {} candidates from {} records",
            config.m_items,
            records.len()
        )));
    }
    let (features, labels) = preprocess(records)?;
    let model = train_linear(&features, &labels, options)?;
    let training_accuracy = model.accuracy(&features, &labels);
    let scores = predict_relevance(&model, &features)?;

    let mut rng = stream(&[config.seed, tag::SELECTION]);
    let source_rows = index::sample(&mut rng, records.len(), config.m_items).into_vec();
    let relevance: Vec<f64> = source_rows.iter().map(|&r| scores[r]).collect();
    let truth: Vec<f64> = source_rows.iter().map(|&r| labels[r]).collect();
    let universe = build_german_universe(&relevance, &truth, config)?;
    Ok(GermanExperiment {
        model,
        training_accuracy,
        source_rows,
        universe,
    })
}

#[derive(Serialize)]
struct UniverseRow {
    item_id: u32,
    source_row: usize,
    learned_relevance: f64,
    ground_truth_label: f64,
    candidate_score: f64,
    boosted: bool,
}

/// CSV with one row per candidate.
pub fn write_universe_csv<W: Write>(experiment: &GermanExperiment, out: W) -> Result<()> {
    let u = &experiment.universe;
    let mut writer = csv::Writer::from_writer(out);
    for (i, &row) in experiment.source_rows.iter().enumerate() {
        writer.serialize(UniverseRow {
            item_id: i as u32,
            source_row: row,
            learned_relevance: u.relevance[i],
            ground_truth_label: u.truth[i],
            candidate_score: u.candidate_scores[i],
            boosted: u.boosted.contains(&ItemId(i as u32)),
        })?;
    }
    writer.flush()?;
    Ok(())
}
