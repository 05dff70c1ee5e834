//! Ranking policies and Plackett-Luce sampling.
//!
//! Every stochastic policy reduces to a vector of positive sampling weights
//! over the candidates; a ranking is then drawn from the Plackett-Luce
//! distribution those weights induce. Weights are held in the log domain so
//! that large exponents (`beta * r` in the hundreds) and tiny inverse
//! frequencies never overflow or underflow.

use std::cmp::Ordering;
use std::fmt;

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frequency::FrequencyTable;
use crate::simgen::CandidateSet;

/// Strictly positive, finite Plackett-Luce weight, stored as its natural log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingWeight {
    ln: f64,
}

impl SamplingWeight {
    /// Linear weights below this are treated as non-positive.
    pub const MIN_VALUE: f64 = 1e-300;

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < Self::MIN_VALUE {
            return Err(Error::invalid(format!(
                "sampling weight must be finite and >= {:e}, got {value}",
                Self::MIN_VALUE
            )));
        }
        Ok(Self { ln: value.ln() })
    }

    pub fn from_ln(ln: f64) -> Result<Self> {
        if !ln.is_finite() {
            return Err(Error::invalid(format!(
                "log-weight must be finite, got {ln}"
            )));
        }
        Ok(Self { ln })
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    /// Linear value. Saturates to infinity when `ln > ~709`; sampling never
    /// goes through this path.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }
}

/// Convert plain positive values into weights.
pub fn weights_from_values(values: &[f64]) -> Result<Vec<SamplingWeight>> {
    values.iter().map(|&v| SamplingWeight::new(v)).collect()
}

/// A permutation of candidate-set positions; `order()[0]` is shown first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    /// Validates that `order` is a permutation of `0..order.len()`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        check_permutation(&order, order.len())?;
        Ok(Self(order))
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The first `n` positions (all of them if `n >= len`).
    pub fn prefix(&self, n: usize) -> &[usize] {
        &self.0[..n.min(self.0.len())]
    }

    pub fn into_order(self) -> Vec<usize> {
        self.0
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::invalid(format!(
            "ranking has length {} but there are {n} candidates",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Second-stage ranking policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankingPolicy {
    /// Sort by relevance, highest first.
    Deterministic,
    /// Uniformly random permutation.
    Randomized,
    /// Plackett-Luce over `exp(c * r)`.
    ScaledPl { c: f64 },
    /// Plackett-Luce over `1 / W`.
    InverseWeighted,
    /// Plackett-Luce over `alpha * exp(beta * r) + 1 / (W + alpha)`.
    PlIcfw { alpha: f64, beta: f64 },
}

impl RankingPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            RankingPolicy::Deterministic => "deterministic",
            RankingPolicy::Randomized => "randomized",
            RankingPolicy::ScaledPl { .. } => "scaled_pl",
            RankingPolicy::InverseWeighted => "inverse_weighted",
            RankingPolicy::PlIcfw { .. } => "pl_icfw",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, RankingPolicy::Deterministic)
    }

    /// Whether weights depend on candidate frequencies.
    pub fn uses_frequencies(&self) -> bool {
        matches!(
            self,
            RankingPolicy::InverseWeighted | RankingPolicy::PlIcfw { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            }
        };
        match *self {
            RankingPolicy::ScaledPl { c } => check("c", c),
            RankingPolicy::PlIcfw { alpha, beta } => {
                check("alpha", alpha)?;
                check("beta", beta)
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RankingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankingPolicy::ScaledPl { c } => write!(f, "scaled_pl(c={c})"),
            RankingPolicy::PlIcfw { alpha, beta } => {
                write!(f, "pl_icfw(alpha={alpha}, beta={beta})")
            }
            other => f.write_str(other.name()),
        }
    }
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!(
            "relevance scores must be finite, got {bad}"
        )));
    }
    Ok(())
}

/// Sort by relevance, highest first; ties keep their original order.
pub fn deterministic_rank(scores: &[f64]) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot rank an empty score sequence"));
    }
    check_scores(scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // sort_by is stable, so equal scores stay in index order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(Ranking(order))
}

/// Softmax weights `exp(c * r_i)`, shifted so the largest is 1.
pub fn scaled_pl_weights(scores: &[f64], c: f64) -> Result<Vec<SamplingWeight>> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::invalid(format!(
            "c must be finite and >= 0, got {c}"
        )));
    }
    check_scores(scores)?;
    let max = scores
        .iter()
        .map(|&r| c * r)
        .fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|&r| SamplingWeight::from_ln(c * r - max))
        .collect()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Inverse-candidate-frequency weights
/// `alpha * exp(beta * r_i) + 1 / (freq_i + alpha)`.
///
/// With `alpha = 0` this is exactly `1 / freq_i` whatever `beta` is. The sum is
/// formed with log-add-exp, so `beta * r` may be arbitrarily large.
pub fn icfw_weights(
    scores: &[f64],
    freqs: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<SamplingWeight>> {
    RankingPolicy::PlIcfw { alpha, beta }.validate()?;
    check_scores(scores)?;
    if scores.len() != freqs.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} frequencies",
            scores.len(),
            freqs.len()
        )));
    }
    scores
        .iter()
        .zip(freqs)
        .map(|(&r, &w)| {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "frequency must be finite and >= 0, got {w}"
                )));
            }
            if alpha == 0.0 {
                if w == 0.0 {
                    return Err(Error::invalid("frequency 0 with alpha = 0 divides by zero"));
                }
                return SamplingWeight::from_ln(-w.ln());
            }
            let head = alpha.ln() + beta * r;
            let tail = -(w + alpha).ln();
            SamplingWeight::from_ln(log_add_exp(head, tail))
        })
        .collect()
}

/// Draw one ranking from the Plackett-Luce distribution with the given weights.
///
/// Each item gets the key `u_i^(1 / w_i)` with `u_i` uniform on the open unit
/// interval, and items are ordered by key, largest first. Keys are compared
/// through their logarithm `ln(w_i) - ln(-ln(u_i))`, which preserves the
/// order and stays representable for any weight.
pub fn sample_ranking<R: Rng + ?Sized>(weights: &[SamplingWeight], rng: &mut R) -> Result<Ranking> {
    if weights.is_empty() {
        return Err(Error::invalid("cannot sample a ranking of zero items"));
    }
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let u: f64 = rng.sample(Open01);
            (w.ln - (-u.ln()).ln(), i)
        })
        .collect();
    keyed.sort_unstable_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    });
    Ok(Ranking(keyed.into_iter().map(|(_, i)| i).collect()))
}

/// Exact Plackett-Luce probability of `order` under `weights`.
///
/// `prod_j w[order[j]] / sum_{l >= j} w[order[l]]`, evaluated in log space.
/// Brute-force oracle for small instances.
pub fn exact_pl_probability(weights: &[SamplingWeight], order: &[usize]) -> Result<f64> {
    check_permutation(order, weights.len())?;
    pl_prefix_probability(weights, order)
}

/// Probability that a Plackett-Luce ranking starts with `prefix` (distinct
/// indices into `weights`).
pub fn pl_prefix_probability(weights: &[SamplingWeight], prefix: &[usize]) -> Result<f64> {
    let mut seen = vec![false; weights.len()];
    for &i in prefix {
        if i >= weights.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!(
                "prefix {prefix:?} is not a set of distinct positions"
            )));
        }
    }
    let mut tail = weights
        .iter()
        .zip(&seen)
        .filter(|(_, &s)| !s)
        .fold(f64::NEG_INFINITY, |acc, (w, _)| log_add_exp(acc, w.ln));
    let mut log_p = 0.0;
    for &i in prefix.iter().rev() {
        let w = weights[i].ln;
        tail = log_add_exp(tail, w);
        log_p += w - tail;
    }
    Ok(log_p.exp())
}

/// Sampling weights a policy assigns to one candidate set; `None` for
/// [`RankingPolicy::Deterministic`].
pub fn policy_weights(
    policy: &RankingPolicy,
    set: &CandidateSet,
    freqs: &FrequencyTable,
) -> Result<Option<Vec<SamplingWeight>>> {
    policy.validate()?;
    if set.is_empty() {
        return Err(Error::invalid(format!(
            "candidate set of user {} is empty",
            set.user
        )));
    }
    let lookup = || -> Result<Vec<f64>> {
        set.items
            .iter()
            .map(|item| {
                freqs.frequency_of(*item).ok_or_else(|| {
                    Error::invalid(format!("item {item} has no candidate frequency"))
                })
            })
            .collect()
    };
    let weights = match *policy {
        RankingPolicy::Deterministic => return Ok(None),
        RankingPolicy::Randomized => vec![SamplingWeight { ln: 0.0 }; set.len()],
        RankingPolicy::ScaledPl { c } => scaled_pl_weights(&set.scores, c)?,
        RankingPolicy::InverseWeighted => icfw_weights(&set.scores, &lookup()?, 0.0, 0.0)?,
        RankingPolicy::PlIcfw { alpha, beta } => {
            icfw_weights(&set.scores, &lookup()?, alpha, beta)?
        }
    };
    Ok(Some(weights))
}

/// Rank one candidate set under `policy`.
pub fn rank_with_policy<R: Rng + ?Sized>(
    policy: &RankingPolicy,
    set: &CandidateSet,
    freqs: &FrequencyTable,
    rng: &mut R,
) -> Result<Ranking> {
    match policy_weights(policy, set, freqs)? {
        None => deterministic_rank(&set.scores),
        Some(w) => sample_ranking(&w, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::stream;
    use approx::assert_relative_eq;

    fn w(values: &[f64]) -> Vec<SamplingWeight> {
        weights_from_values(values).unwrap()
    }

    #[test]
    fn prefix_probability_marginalizes_full_orders() {
        let w = weights_from_values(&[0.5, 2.0, 1.0, 3.0]).unwrap();
        let all: f64 = (0..4)
            .flat_map(|a| (0..4).filter(move |&b| b != a).map(move |b| [a, b]))
            .map(|p| pl_prefix_probability(&w, &p).unwrap())
            .sum();
        assert_relative_eq!(all, 1.0, max_relative = 1e-12);
        let direct = exact_pl_probability(&w, &[3, 1, 0, 2]).unwrap()
            + exact_pl_probability(&w, &[3, 1, 2, 0]).unwrap();
        assert_relative_eq!(
            pl_prefix_probability(&w, &[3, 1]).unwrap(),
            direct,
            max_relative = 1e-12
        );
        assert_eq!(pl_prefix_probability(&w, &[]).unwrap(), 1.0);
        assert!(pl_prefix_probability(&w, &[1, 1]).is_err());
        assert!(pl_prefix_probability(&w, &[4]).is_err());
    }

    #[test]
    fn deterministic_examples() {
        assert_eq!(
            deterministic_rank(&[0.2, 0.9, 0.5]).unwrap().order(),
            &[1, 2, 0]
        );
        assert_eq!(deterministic_rank(&[0.5, 0.5]).unwrap().order(), &[0, 1]);
        assert_eq!(deterministic_rank(&[7.0]).unwrap().order(), &[0]);
        assert!(deterministic_rank(&[]).is_err());
        assert!(deterministic_rank(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn scaled_pl_examples() {
        let zero = scaled_pl_weights(&[0.1, 9.9], 0.0).unwrap();
        assert_eq!(zero[0].value(), zero[1].value());

        let one = scaled_pl_weights(&[1.0, 2.0], 1.0).unwrap();
        assert_relative_eq!(
            one[1].value() / one[0].value(),
            1f64.exp(),
            max_relative = 1e-12
        );

        let sharp = scaled_pl_weights(&[0.0, 0.1], 50.0).unwrap();
        let p = exact_pl_probability(&sharp, &[1, 0]).unwrap();
        let expected = 5f64.exp() / (1.0 + 5f64.exp());
        assert_relative_eq!(p, expected, max_relative = 1e-12);
        assert!((p - 0.9933).abs() < 5e-5);

        assert!(scaled_pl_weights(&[1.0], -1.0).is_err());
    }

    #[test]
    fn icfw_examples() {
        let inv = icfw_weights(&[0.3, 0.8], &[2.0, 5.0], 0.0, 0.0).unwrap();
        assert_relative_eq!(inv[0].value(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(inv[1].value(), 0.2, max_relative = 1e-15);

        let one = icfw_weights(&[0.0], &[1.0], 1.0, 1.0).unwrap();
        assert_relative_eq!(one[0].value(), 1.5, max_relative = 1e-15);

        assert!(icfw_weights(&[0.0], &[0.0], 0.0, 1.0).is_err());
        assert!(icfw_weights(&[0.0], &[1.0, 2.0], 1.0, 1.0).is_err());
        assert!(icfw_weights(&[0.0], &[1.0], f64::NAN, 1.0).is_err());
        // frequency 0 is fine once alpha > 0
        assert!(icfw_weights(&[0.0], &[0.0], 0.5, 1.0).is_ok());
    }

    #[test]
    fn icfw_survives_huge_exponents() {
        let weights = icfw_weights(&[0.0, 0.5, 1.0], &[3.0, 3.0, 3.0], 1000.0, 1000.0).unwrap();
        assert!(weights.iter().all(|w| w.ln().is_finite()));
        assert!(weights[0].ln() < weights[1].ln() && weights[1].ln() < weights[2].ln());
    }

    #[test]
    fn exact_probability_examples() {
        assert_relative_eq!(exact_pl_probability(&w(&[1.0, 1.0]), &[0, 1]).unwrap(), 0.5);
        assert_relative_eq!(
            exact_pl_probability(&w(&[3.0, 1.0]), &[1, 0]).unwrap(),
            0.25
        );
        assert_relative_eq!(
            exact_pl_probability(&w(&[2.0, 1.0, 1.0]), &[0, 1, 2]).unwrap(),
            0.25,
            max_relative = 1e-14
        );
        assert!(exact_pl_probability(&w(&[1.0, 1.0]), &[0, 0]).is_err());
        assert!(exact_pl_probability(&w(&[1.0, 1.0]), &[0]).is_err());
        assert!(exact_pl_probability(&w(&[1.0, 1.0]), &[0, 2]).is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(SamplingWeight::new(0.0).is_err());
        assert!(SamplingWeight::new(-1.0).is_err());
        assert!(SamplingWeight::new(1e-301).is_err());
        assert!(SamplingWeight::new(f64::INFINITY).is_err());
        assert!(SamplingWeight::new(1e-300).is_ok());
        assert!(SamplingWeight::from_ln(f64::NAN).is_err());
    }

    #[test]
    fn singleton_and_empty_sampling() {
        let mut rng = stream(&[1]);
        for _ in 0..10 {
            assert_eq!(sample_ranking(&w(&[1.0]), &mut rng).unwrap().order(), &[0]);
        }
        assert!(sample_ranking(&[], &mut rng).is_err());
    }

    #[test]
    fn first_pick_frequency_three_to_one() {
        let mut rng = stream(&[2]);
        let weights = w(&[3.0, 1.0]);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| sample_ranking(&weights, &mut rng).unwrap().order()[0] == 0)
            .count();
        let frac = hits as f64 / draws as f64;
        assert!((frac - 0.75).abs() < 0.005, "{frac}");
    }

    #[test]
    fn ranking_from_order_validates() {
        assert!(Ranking::from_order(vec![2, 0, 1]).is_ok());
        assert!(Ranking::from_order(vec![1, 1]).is_err());
        let r = Ranking::from_order(vec![2, 0, 1]).unwrap();
        assert_eq!(r.prefix(2), &[2, 0]);
        assert_eq!(r.prefix(9), &[2, 0, 1]);
    }

    #[test]
    fn policy_validation() {
        assert!(RankingPolicy::ScaledPl { c: -0.1 }.validate().is_err());
        assert!(RankingPolicy::PlIcfw {
            alpha: 1.0,
            beta: f64::INFINITY
        }
        .validate()
        .is_err());
        assert!(RankingPolicy::PlIcfw {
            alpha: 0.0,
            beta: 0.0
        }
        .validate()
        .is_ok());
    }
}
