use std::path::PathBuf;

use exposim::german::{
    feature_names, fit_logistic, load_german, parse_german, preprocess, run_german_pipeline,
    write_universe_csv, CreditRecord, LinearModel, TrainOptions, FEATURE_DIM,
};
use exposim::streams::stream;
use exposim::{Error, ExperimentConfig};
use rand::Rng;

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/german.data")
}

fn records() -> Vec<CreditRecord> {
    load_german(data_path()).unwrap()
}

#[test]
fn canonical_file_counts() {
    let r = records();
    assert_eq!(r.len(), 1000);
    assert_eq!(r.iter().filter(|x| x.good).count(), 700);
    assert_eq!(r.iter().filter(|x| !x.good).count(), 300);
}

#[test]
fn truncated_file_is_rejected() {
    let text = std::fs::read_to_string(data_path()).unwrap();
    let head: String = text.lines().take(999).map(|l| format!("{l}\n")).collect();
    assert!(matches!(load_from_str(&head), Err(Error::Parse { .. })));
    assert!(matches!(
        load_german("/nonexistent/german.data"),
        Err(Error::File { .. })
    ));
}

fn load_from_str(text: &str) -> exposim::Result<Vec<CreditRecord>> {
    parse_german(text.as_bytes(), Some(1000))
}

#[test]
fn encoding_is_standardized_one_hot() {
    let (x, y) = preprocess(&records()).unwrap();
    assert_eq!(feature_names().len(), FEATURE_DIM);
    assert_eq!(x.len(), 1000);
    assert!(y.iter().all(|&v| v == 0.0 || v == 1.0));
    for j in 0..3 {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / 1000.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1000.0;
        assert!(
            mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12,
            "column {j}"
        );
    }
    for row in &x {
        assert!(row[3..].iter().all(|&v| v == 0.0 || v == 1.0));
        // six one-hot blocks, one level set in each
        assert_eq!(row[3..].iter().sum::<f64>(), 6.0);
    }
}

#[test]
fn training_reaches_reasonable_accuracy_with_falling_loss() {
    let (x, y) = preprocess(&records()).unwrap();
    let (model, losses) = fit_logistic(&x, &y, &TrainOptions::default()).unwrap();
    assert_eq!(losses.len(), 2001);
    assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!((losses[0] - std::f64::consts::LN_2).abs() < 1e-12);
    let acc = model.accuracy(&x, &y);
    assert!(acc > 0.70, "training accuracy {acc}");
}

fn numeric_gradient(
    model: &LinearModel,
    x: &[[f64; FEATURE_DIM]],
    y: &[f64],
    h: f64,
) -> (Vec<f64>, f64) {
    let loss = |m: &LinearModel| m.loss_and_gradient(x, y).0;
    let grad = (0..model.dim())
        .map(|j| {
            let (mut up, mut down) = (model.clone(), model.clone());
            up.weights[j] += h;
            down.weights[j] -= h;
            (loss(&up) - loss(&down)) / (2.0 * h)
        })
        .collect();
    let (mut up, mut down) = (model.clone(), model.clone());
    up.bias += h;
    down.bias -= h;
    (grad, (loss(&up) - loss(&down)) / (2.0 * h))
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let (x, y) = preprocess(&records()).unwrap();
    let mut rng = stream(&[6]);
    for _ in 0..10 {
        let model = LinearModel {
            weights: (0..FEATURE_DIM)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            bias: rng.random_range(-1.0..1.0),
        };
        let (_, g, gb) = model.loss_and_gradient(&x, &y);
        let (n, nb) = numeric_gradient(&model, &x, &y, 1e-5);
        let diff: f64 =
            g.iter().zip(&n).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + (gb - nb).powi(2);
        let scale: f64 = g.iter().map(|a| a * a).sum::<f64>() + gb * gb;
        let rel = (diff / scale).sqrt();
        assert!(rel < 1e-5, "relative error {rel}");
    }
}

#[test]
fn pipeline_is_deterministic_and_boosts_low_relevance() {
    let r = records();
    let config = ExperimentConfig {
        seed: 3,
        ..ExperimentConfig::german()
    };
    let a = run_german_pipeline(&r, &config, &TrainOptions::default()).unwrap();
    let b = run_german_pipeline(&r, &config, &TrainOptions::default()).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.source_rows, b.source_rows);
    assert_eq!(a.universe.sets, b.universe.sets);

    let u = &a.universe;
    assert_eq!(
        (u.config.m_items, u.config.n_users, u.config.k, u.config.ell),
        (200, 2000, 15, 5)
    );
    let mut distinct = a.source_rows.clone();
    distinct.sort();
    distinct.dedup();
    assert_eq!(distinct.len(), 200);

    let mut sorted = u.relevance.clone();
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[99] + sorted[100]) / 2.0;
    assert_eq!(u.boosted.len(), 10);
    for item in &u.boosted {
        let rel = u.relevance[item.index()];
        assert!(rel < median);
        let rank = sorted.iter().position(|&s| s == rel).unwrap();
        assert!((50..60).contains(&rank), "ascending rank {rank}");
        assert_eq!(u.candidate_scores[item.index()], 5.0);
    }
    for (i, &row) in a.source_rows.iter().enumerate() {
        assert_eq!(u.truth[i], r[row].label());
    }
}

#[test]
fn universe_csv_columns() {
    let r = records();
    let run =
        run_german_pipeline(&r, &ExperimentConfig::german(), &TrainOptions::default()).unwrap();
    let mut out = Vec::new();
    write_universe_csv(&run, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "item_id,source_row,learned_relevance,ground_truth_label,candidate_score,boosted"
    );
    assert_eq!(lines.clone().count(), 200);
    assert_eq!(lines.filter(|l| l.ends_with(",true")).count(), 10);
}
