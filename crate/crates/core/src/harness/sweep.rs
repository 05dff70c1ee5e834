//! Hyperparameter sweeps and their CSV output.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::experiment::{Experiment, ResultRow, RunKey};
use crate::error::{Error, Result};
use crate::ranking::RankingPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    Synthetic,
    German,
}

impl Dataset {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Dataset::Synthetic),
            "german" => Ok(Dataset::German),
            other => Err(Error::Config(format!("unknown dataset {other:?}"))),
        }
    }

    /// Shared grid for `alpha` (PL-ICFW) and `c` (Scaled PL).
    pub fn default_grid(self) -> Vec<f64> {
        let mut grid: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        match self {
            Dataset::Synthetic => grid.extend([0.01, 0.025, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]),
            Dataset::German => {
                grid.extend([0.01, 0.025, 1.5, 2.0]);
                grid.extend((2..=14).map(|i| i as f64 / 2.0));
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}

/// How PL-ICFW's `beta` follows `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// `beta = factor * alpha`.
    Proportional(f64),
}

impl BetaRule {
    pub const EQUAL: BetaRule = BetaRule::Proportional(1.0);

    /// `"eq"` or a numeric factor such as `"0.35"`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "eq" {
            return Ok(Self::EQUAL);
        }
        match s.parse::<f64>() {
            Ok(f) if f.is_finite() && f >= 0.0 => Ok(BetaRule::Proportional(f)),
            _ => Err(Error::Config(format!(
                "beta rule must be \"eq\" or a factor >= 0, got {s:?}"
            ))),
        }
    }

    pub fn beta(self, alpha: f64) -> f64 {
        match self {
            BetaRule::Proportional(f) => f * alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyFamily {
    Deterministic,
    Randomized,
    InverseWeighted,
    ScaledPl,
    PlIcfw,
}

impl PolicyFamily {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "deterministic" => PolicyFamily::Deterministic,
            "randomized" => PolicyFamily::Randomized,
            "inverse_weighted" => PolicyFamily::InverseWeighted,
            "scaled_pl" => PolicyFamily::ScaledPl,
            "pl_icfw" => PolicyFamily::PlIcfw,
            other => return Err(Error::Config(format!("unknown policy {other:?}"))),
        })
    }

    pub fn has_grid(self) -> bool {
        matches!(self, PolicyFamily::ScaledPl | PolicyFamily::PlIcfw)
    }
}

/// One policy family over a hyperparameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: PolicyFamily,
    pub grid: Vec<f64>,
    pub beta_rule: BetaRule,
    pub trials: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.family.has_grid() && self.grid.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        if let Some(bad) = self.grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Config(format!(
                "grid values must be finite and >= 0, got {bad}"
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Concrete policies, in grid order.
    pub fn policies(&self) -> Vec<RankingPolicy> {
        match self.family {
            PolicyFamily::Deterministic => vec![RankingPolicy::Deterministic],
            PolicyFamily::Randomized => vec![RankingPolicy::Randomized],
            PolicyFamily::InverseWeighted => vec![RankingPolicy::InverseWeighted],
            PolicyFamily::ScaledPl => self
                .grid
                .iter()
                .map(|&c| RankingPolicy::ScaledPl { c })
                .collect(),
            PolicyFamily::PlIcfw => self
                .grid
                .iter()
                .map(|&alpha| RankingPolicy::PlIcfw {
                    alpha,
                    beta: self.beta_rule.beta(alpha),
                })
                .collect(),
        }
    }
}

/// An ordered list of sweeps evaluated against one universe. Grid points are
/// numbered consecutively across the whole plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub seed: u64,
    pub sweeps: Vec<SweepSpec>,
}

impl SweepPlan {
    /// Every baseline plus Scaled PL and PL-ICFW (`beta = alpha` and
    /// `beta = 0.35 alpha`) over the dataset's default grid.
    pub fn default_for(dataset: Dataset, trials: usize, seed: u64) -> Self {
        let grid = dataset.default_grid();
        let single = |family| SweepSpec {
            family,
            grid: Vec::new(),
            beta_rule: BetaRule::EQUAL,
            trials,
        };
        let sweeps = vec![
            single(PolicyFamily::Deterministic),
            single(PolicyFamily::Randomized),
            single(PolicyFamily::InverseWeighted),
            SweepSpec {
                grid: grid.clone(),
                ..single(PolicyFamily::ScaledPl)
            },
            SweepSpec {
                grid: grid.clone(),
                ..single(PolicyFamily::PlIcfw)
            },
            SweepSpec {
                grid,
                beta_rule: BetaRule::Proportional(0.35),
                ..single(PolicyFamily::PlIcfw)
            },
        ];
        Self { seed, sweeps }
    }

    pub fn points(&self) -> Result<Vec<(RankingPolicy, usize)>> {
        let mut points = Vec::new();
        for s in &self.sweeps {
            s.validate()?;
            points.extend(s.policies().into_iter().map(|p| (p, s.trials)));
        }
        if points.is_empty() {
            return Err(Error::Config("sweep plan has no points".into()));
        }
        Ok(points)
    }

    /// Read a TOML plan. Missing `trials`/`seed` fall back to the arguments.
    ///
    /// ```toml
    /// trials = 5
    /// [[sweep]]
    /// family = "pl_icfw"
    /// beta_rule = "0.35"
    /// grid = "default"        # or a list such as [0.1, 0.5, 1.0]
    /// ```
    pub fn from_toml(text: &str, dataset: Dataset, trials: usize, seed: u64) -> Result<Self> {
        let file: PlanFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
        let trials = file.trials.unwrap_or(trials);
        let seed = file.seed.unwrap_or(seed);
        if file.sweep.is_empty() {
            return Ok(Self::default_for(dataset, trials, seed));
        }
        let sweeps = file
            .sweep
            .into_iter()
            .map(|e| {
                let family = PolicyFamily::parse(&e.family)?;
                let grid = match e.grid {
                    None => Vec::new(),
                    Some(GridEntry::Named(n)) if n == "default" => dataset.default_grid(),
                    Some(GridEntry::Named(n)) => {
                        return Err(Error::Config(format!(
                            "unknown grid {n:?} (use \"default\" or a list)"
                        )))
                    }
                    Some(GridEntry::Values(v)) => v,
                };
                let spec = SweepSpec {
                    family,
                    grid,
                    beta_rule: e
                        .beta_rule
                        .as_deref()
                        .map(BetaRule::parse)
                        .transpose()?
                        .unwrap_or(BetaRule::EQUAL),
                    trials: e.trials.unwrap_or(trials),
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { seed, sweeps })
    }

    pub fn from_file(
        path: impl AsRef<Path>,
        dataset: Dataset,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text, dataset, trials, seed)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    trials: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    sweep: Vec<PlanEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanEntry {
    family: String,
    grid: Option<GridEntry>,
    beta_rule: Option<String>,
    trials: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridEntry {
    Named(String),
    Values(Vec<f64>),
}

/// Evaluate every point of `plan`. Points run in parallel on the current
/// rayon pool; results come back in plan order and do not depend on the
/// number of threads.
pub fn sweep(experiment: &Experiment<'_>, plan: &SweepPlan) -> Result<Vec<ResultRow>> {
    let points = plan.points()?;
    points
        .par_iter()
        .enumerate()
        .map(|(i, (policy, trials))| {
            experiment.run(
                policy,
                *trials,
                RunKey {
                    seed: plan.seed,
                    point: i as u64,
                },
            )
        })
        .collect()
}

pub const CSV_HEADER: [&str; 10] = [
    "policy",
    "alpha",
    "beta",
    "c",
    "seed",
    "trial",
    "t1ps_pct",
    "content_quality",
    "gini",
    "runtime_ms",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write per-trial rows followed by a `mean` row for every result.
/// `runtime_ms` is filled only when `record_runtime` is set, so that repeated
/// runs produce identical bytes by default.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W, record_runtime: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let (alpha, beta, c) = match row.policy {
            RankingPolicy::ScaledPl { c } => (None, None, Some(c)),
            RankingPolicy::PlIcfw { alpha, beta } => (Some(alpha), Some(beta), None),
            RankingPolicy::InverseWeighted => (Some(0.0), Some(0.0), None),
            RankingPolicy::Randomized => (None, None, Some(0.0)),
            RankingPolicy::Deterministic => (None, None, None),
        };
        let runtime = if record_runtime {
            format!("{:.3}", row.runtime_ms)
        } else {
            String::new()
        };
        let mut emit = |trial: String, t1ps: f64, cq: f64, gini: f64, runtime: &str| {
            w.write_record([
                row.policy.name().to_string(),
                opt(alpha),
                opt(beta),
                opt(c),
                row.seed.to_string(),
                trial,
                t1ps.to_string(),
                cq.to_string(),
                gini.to_string(),
                runtime.to_string(),
            ])
        };
        for t in &row.per_trial {
            emit(t.trial.to_string(), t.t1ps, t.content_quality, t.gini, "")?;
        }
        emit(
            "mean".into(),
            row.t1ps,
            row.content_quality,
            row.gini,
            &runtime,
        )?;
    }
    w.flush()?;
    Ok(())
}
