use std::collections::BTreeSet;

use exposim::frequency::candidate_frequencies;
use exposim::simgen::gen_candidate_scores;
use exposim::streams::stream;
use exposim::{ExperimentConfig, ItemId, Universe};
use proptest::prelude::*;

/// Kolmogorov-Smirnov distance against the Beta(1, 10) CDF `1 - (1 - x)^10`.
fn ks_beta_1_10(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (1.0 - x).powi(10);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn beta_scores_pass_ks() {
    let config = ExperimentConfig {
        m_items: 20_000,
        n_popular: 0,
        ..ExperimentConfig::synthetic()
    };
    let scores = gen_candidate_scores(&config, &[], &mut stream(&[11])).unwrap();
    assert!(scores.iter().all(|&s| s > 0.0 && s < 1.0));
    let d = ks_beta_1_10(scores);
    // 0.1% critical value, large-sample approximation
    let critical = 1.94947 / (20_000f64).sqrt();
    assert!(d < critical, "KS {d} >= {critical}");
}

#[test]
fn synthetic_universe_shape() {
    let u = Universe::synthetic(&ExperimentConfig::synthetic()).unwrap();
    let popular: Vec<f64> = u
        .candidate_scores
        .iter()
        .copied()
        .filter(|&s| s == 5.0)
        .collect();
    assert_eq!(popular.len(), 10);
    assert_eq!(u.boosted, (0..10).map(ItemId).collect::<Vec<_>>());
    let rest: Vec<f64> = u.candidate_scores[10..].to_vec();
    assert!(ks_beta_1_10(rest) < 1.94947 / (990f64).sqrt());

    for set in &u.sets {
        assert_eq!(set.len(), 40);
        assert_eq!(set.items.iter().collect::<BTreeSet<_>>().len(), 40);
    }
}

#[test]
fn relevance_anti_correlated_with_candidate_score() {
    // Population value for 10 items at c = 5 and 990 Beta(1, 10) items:
    // about -0.416 with a seed-to-seed spread near 0.017.
    for seed in 0..5 {
        let config = ExperimentConfig {
            n_users: 1,
            seed,
            ..ExperimentConfig::synthetic()
        };
        let u = Universe::synthetic(&config).unwrap();
        let r = correlation(&u.candidate_scores, &u.relevance);
        assert!(
            r < 0.0 && (r + 0.416).abs() < 0.07,
            "seed {seed}: correlation {r}"
        );
    }
}

#[test]
fn boosted_items_dominate_candidate_sets() {
    for seed in 0..4 {
        let config = ExperimentConfig {
            seed,
            ..ExperimentConfig::synthetic()
        };
        let u = Universe::synthetic(&config).unwrap();
        let freqs = candidate_frequencies(&u.sets).unwrap();
        let boosted: Vec<f64> = u
            .boosted
            .iter()
            .map(|&i| freqs.count(i).unwrap() as f64)
            .collect();
        let rest: Vec<f64> = (10..1000)
            .map(|i| freqs.count(ItemId(i)).unwrap_or(0) as f64)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&boosted) > mean(&rest) * 5.0, "seed {seed}");
    }
}

#[test]
fn same_seed_same_universe() {
    let config = ExperimentConfig {
        n_users: 300,
        seed: 21,
        ..ExperimentConfig::synthetic()
    };
    let a = Universe::synthetic(&config).unwrap();
    let b = Universe::synthetic(&config).unwrap();
    assert_eq!(a.candidate_scores, b.candidate_scores);
    assert_eq!(a.relevance, b.relevance);
    assert_eq!(a.sets, b.sets);
    let c = Universe::synthetic(&ExperimentConfig { seed: 22, ..config }).unwrap();
    assert_ne!(a.sets, c.sets);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sets_have_k_distinct_items(
        m in 5usize..60,
        k_frac in 0.1f64..1.0,
        n_users in 1usize..40,
        seed in any::<u64>(),
    ) {
        let k = ((m as f64 * k_frac) as usize).max(1);
        let config = ExperimentConfig {
            n_users,
            m_items: m,
            k,
            ell: 1,
            n_popular: m / 5,
            seed,
            ..ExperimentConfig::synthetic()
        };
        let u = Universe::synthetic(&config).unwrap();
        prop_assert_eq!(u.sets.len(), n_users);
        for set in &u.sets {
            let distinct: BTreeSet<_> = set.items.iter().collect();
            prop_assert_eq!(distinct.len(), k);
            prop_assert!(set.items.iter().all(|i| i.index() < m));
        }
    }
}
