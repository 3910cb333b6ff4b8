//! Macro metrics recounted cell by cell.

use ecg2d::pipeline::{metrics_from_confusion, ConfusionMatrix};
use rand::Rng;

pub struct Brute {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
}

/// Counts TP/TN/FP/FN per class by visiting every cell.
pub fn brute_force(m: &[[u64; 8]; 8]) -> Brute {
    let (mut a, mut p, mut s, mut sp) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..8 {
        let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for (t, row) in m.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                match (t == c, q == c) {
                    (true, true) => tp += v,
                    (true, false) => fn_ += v,
                    (false, true) => fp += v,
                    (false, false) => tn += v,
                }
            }
        }
        let frac = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        a += frac(tp + tn, tp + tn + fp + fn_);
        p += frac(tp, tp + fp);
        s += frac(tp, tp + fn_);
        sp += frac(tn, tn + fp);
    }
    let (a, p, s, sp) = (a / 8.0, p / 8.0, s / 8.0, sp / 8.0);
    let f1 = if p + s == 0.0 { 0.0 } else { 2.0 * p * s / (p + s) };
    Brute {
        accuracy: a,
        precision: p,
        sensitivity: s,
        specificity: sp,
        f1,
    }
}

/// Random counts; with `sparse`, most cells are zero so whole classes go missing.
pub fn random_matrix(rng: &mut impl Rng, sparse: bool) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::new();
    for row in cm.counts.iter_mut() {
        for v in row.iter_mut() {
            *v = if sparse && rng.gen_bool(0.6) {
                0
            } else {
                rng.gen_range(0..500)
            };
        }
    }
    if cm.total() == 0 {
        cm.counts[0][0] = 1;
    }
    cm
}

/// Largest gap between the library report and the brute-force recount.
pub fn deviation(cm: &ConfusionMatrix) -> f64 {
    let r = metrics_from_confusion(cm).unwrap();
    let b = brute_force(&cm.counts);
    [
        (r.accuracy, b.accuracy),
        (r.precision, b.precision),
        (r.sensitivity, b.sensitivity),
        (r.specificity, b.specificity),
        (r.f1, b.f1),
    ]
    .iter()
    .fold(0.0, |m, (g, w)| f64::max(m, (g - w).abs()))
}
