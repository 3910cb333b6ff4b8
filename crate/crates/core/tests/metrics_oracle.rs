//! Macro metrics against a direct one-vs-rest count over the raw matrix.

mod common;

use common::metrics_oracle;
use ecg2d::pipeline::{metrics_from_confusion, ConfusionMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn thousand_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        // every fourth matrix leaves some rows and columns empty
        let cm = metrics_oracle::random_matrix(&mut rng, i % 4 == 0);
        let d = metrics_oracle::deviation(&cm);
        assert!(d <= 1e-12, "matrix {i}: deviation {d:e}");
    }
}

#[test]
fn diagonal_is_perfect() {
    let mut cm = ConfusionMatrix::new();
    for c in 0..8 {
        cm.counts[c][c] = 10 * (c as u64 + 1);
    }
    let r = metrics_from_confusion(&cm).unwrap();
    assert_eq!([r.accuracy, r.precision, r.sensitivity, r.specificity, r.f1], [1.0; 5]);
}

proptest! {
    #[test]
    fn scores_are_fractions(cells in proptest::collection::vec(0u64..50, 64)) {
        let mut cm = ConfusionMatrix::new();
        for (i, v) in cells.iter().enumerate() {
            cm.counts[i / 8][i % 8] = *v;
        }
        prop_assume!(cm.total() > 0);
        let r = metrics_from_confusion(&cm).unwrap();
        for v in [r.accuracy, r.precision, r.sensitivity, r.specificity, r.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let (p, s) = (r.precision, r.sensitivity);
        let f1 = if p + s > 0.0 { 2.0 * p * s / (p + s) } else { 0.0 };
        prop_assert!((r.f1 - f1).abs() < 1e-15);
        // macro accuracy equals the mean of per-class (TP + TN) / total
        let total = cm.total() as f64;
        let mean: f64 = r.per_class.iter().map(|m| (m.tp + m.tn) as f64 / total).sum::<f64>() / 8.0;
        prop_assert!((r.accuracy - mean).abs() < 1e-15);
    }
}
