//! Confusion matrices and macro-averaged one-vs-rest scores.

use std::fmt::Write as _;

use super::PipelineError;
use crate::wfdb::BeatClass;

const K: usize = BeatClass::COUNT;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    pub fn record(&mut self, truth: BeatClass, predicted: BeatClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction of samples on the diagonal; `None` for an empty matrix.
    pub fn overall_accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.correct() as f64 / t as f64)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..K).all(|i| (0..K).all(|j| i == j || self.counts[i][j] == 0))
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for i in 0..K {
            for j in 0..K {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    /// Comma-separated with a header row and a leading true-class column.
    pub fn to_delimited(&self) -> String {
        let mut s = String::from("true\\pred");
        for c in BeatClass::ALL {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
        for c in BeatClass::ALL {
            s.push_str(c.acronym());
            for v in self.counts[c.index()] {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Parses the output of [`ConfusionMatrix::to_delimited`].
    pub fn from_delimited(text: &str) -> Result<ConfusionMatrix, PipelineError> {
        let bad = |m: String| PipelineError::Format(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        lines.next().ok_or_else(|| bad("empty confusion matrix".into()))?;
        let mut cm = ConfusionMatrix::new();
        let mut rows = 0;
        for line in lines {
            let mut cells = line.split(',');
            let name = cells.next().unwrap_or_default().trim();
            let class: BeatClass = name.parse().map_err(|_| bad(format!("unknown class `{name}`")))?;
            let values: Vec<u64> = cells
                .map(|c| c.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("row {name}: {e}")))?;
            if values.len() != K {
                return Err(bad(format!("row {name} has {} columns", values.len())));
            }
            cm.counts[class.index()].copy_from_slice(&values);
            rows += 1;
        }
        if rows != K {
            return Err(bad(format!("expected {K} rows, got {rows}")));
        }
        Ok(cm)
    }
}

/// One-vs-rest counts and rates of a single class; a rate is `None` when its
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class: BeatClass,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `(class, metric)` pairs whose denominator was zero and counted as 0.
    pub zero_denominators: Vec<(BeatClass, &'static str)>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Macro-averaged accuracy, precision, sensitivity and specificity over all
/// eight classes; F1 is the harmonic mean of macro precision and macro
/// sensitivity.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<MetricsReport, PipelineError> {
    let total = cm.total();
    if total == 0 {
        return Err(PipelineError::EmptyMatrix);
    }
    let mut per_class = Vec::with_capacity(K);
    let mut zero_denominators = Vec::new();
    for class in BeatClass::ALL {
        let c = class.index();
        let tp = cm.counts[c][c];
        let fn_ = cm.counts[c].iter().sum::<u64>() - tp;
        let fp = (0..K).map(|r| cm.counts[r][c]).sum::<u64>() - tp;
        let tn = total - tp - fn_ - fp;
        let m = ClassMetrics {
            class,
            tp,
            tn,
            fp,
            fn_,
            accuracy: (tp + tn) as f64 / total as f64,
            precision: ratio(tp, tp + fp),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
        };
        for (name, v) in [
            ("precision", m.precision),
            ("sensitivity", m.sensitivity),
            ("specificity", m.specificity),
        ] {
            if v.is_none() {
                zero_denominators.push((class, name));
            }
        }
        per_class.push(m);
    }
    let mean = |f: &dyn Fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / K as f64;
    let accuracy = mean(&|m| m.accuracy);
    let precision = mean(&|m| m.precision.unwrap_or(0.0));
    let sensitivity = mean(&|m| m.sensitivity.unwrap_or(0.0));
    let specificity = mean(&|m| m.specificity.unwrap_or(0.0));
    let f1 = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    };
    Ok(MetricsReport {
        accuracy,
        precision,
        sensitivity,
        specificity,
        f1,
        per_class,
        zero_denominators,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

impl MetricsReport {
    /// Aligned text table: per-class rows followed by the macro row.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<6}{:>8}{:>8}{:>8}{:>8}{:>10}{:>10}{:>10}{:>10}\n",
            "class", "TP", "TN", "FP", "FN", "acc", "prec", "sens", "spec"
        );
        for m in &self.per_class {
            writeln!(
                s,
                "{:<6}{:>8}{:>8}{:>8}{:>8}{:>10.4}{:>10}{:>10}{:>10}",
                m.class.acronym(),
                m.tp,
                m.tn,
                m.fp,
                m.fn_,
                m.accuracy,
                opt(m.precision),
                opt(m.sensitivity),
                opt(m.specificity)
            )
            .unwrap();
        }
        writeln!(
            s,
            "{:<38}{:>10.4}{:>10.4}{:>10.4}{:>10.4}",
            "macro", self.accuracy, self.precision, self.sensitivity, self.specificity
        )
        .unwrap();
        writeln!(s, "F1 {:.4}", self.f1).unwrap();
        for (c, name) in &self.zero_denominators {
            writeln!(s, "note: {c} {name} has a zero denominator and counts as 0").unwrap();
        }
        s
    }

    /// `metric,value` lines, macro scores first, then per-class rates.
    pub fn to_delimited(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (k, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("f1", self.f1),
        ] {
            writeln!(s, "{k},{v}").unwrap();
        }
        for m in &self.per_class {
            let c = m.class.acronym();
            writeln!(s, "{c}.accuracy,{}", m.accuracy).unwrap();
            for (k, v) in [
                ("precision", m.precision),
                ("sensitivity", m.sensitivity),
                ("specificity", m.specificity),
            ] {
                match v {
                    Some(v) => writeln!(s, "{c}.{k},{v}").unwrap(),
                    None => writeln!(s, "{c}.{k},undefined").unwrap(),
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embedded(rows: &[[u64; 2]; 2]) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::new();
        for (dst, src) in cm.counts.iter_mut().zip(rows) {
            dst[..2].copy_from_slice(src);
        }
        cm
    }

    #[test]
    fn diagonal_gives_all_ones() {
        let mut cm = ConfusionMatrix::new();
        for c in BeatClass::ALL {
            cm.counts[c.index()][c.index()] = 5 + c.index() as u64;
        }
        let r = metrics_from_confusion(&cm).unwrap();
        for v in [r.accuracy, r.precision, r.sensitivity, r.specificity, r.f1] {
            assert_eq!(v, 1.0);
        }
        assert!(r.zero_denominators.is_empty());
    }

    #[test]
    fn two_class_hand_arithmetic() {
        let cm = embedded(&[[9, 1], [2, 8]]);
        let r = metrics_from_confusion(&cm).unwrap();
        let c0 = r.per_class[0];
        assert_eq!((c0.tp, c0.fp, c0.fn_, c0.tn), (9, 2, 1, 8));
        assert_eq!(c0.precision, Some(9.0 / 11.0));
        assert_eq!(c0.sensitivity, Some(0.9));
        assert_eq!(r.per_class[1].precision, Some(8.0 / 9.0));
        // the six empty classes: no positives, all negatives correct
        let want_p = (9.0 / 11.0 + 8.0 / 9.0) / 8.0;
        let want_sen = (0.9 + 0.8) / 8.0;
        let want_sp = (8.0 / 10.0 + 9.0 / 10.0 + 6.0) / 8.0;
        let want_acc = (17.0 / 20.0 * 2.0 + 6.0) / 8.0;
        assert!((r.precision - want_p).abs() < 1e-15);
        assert!((r.sensitivity - want_sen).abs() < 1e-15);
        assert!((r.specificity - want_sp).abs() < 1e-15);
        assert!((r.accuracy - want_acc).abs() < 1e-15);
        assert!((r.f1 - 2.0 * want_p * want_sen / (want_p + want_sen)).abs() < 1e-15);
        assert_eq!(r.zero_denominators.len(), 12);
    }

    #[test]
    fn never_predicted_class_is_flagged() {
        let mut cm = ConfusionMatrix::new();
        for c in BeatClass::ALL {
            cm.counts[c.index()][c.index()] = 3;
        }
        cm.counts[2][2] = 0;
        cm.counts[2][0] = 3;
        let r = metrics_from_confusion(&cm).unwrap();
        assert_eq!(r.per_class[2].precision, None);
        assert!(r.zero_denominators.contains(&(BeatClass::ALL[2], "precision")));
        assert!(r.precision < 1.0);
    }

    #[test]
    fn empty_matrix() {
        assert!(matches!(
            metrics_from_confusion(&ConfusionMatrix::new()),
            Err(PipelineError::EmptyMatrix)
        ));
    }

    #[test]
    fn delimited_round_trip() {
        let mut cm = embedded(&[[9, 1], [2, 8]]);
        cm.counts[7][3] = 42;
        let back = ConfusionMatrix::from_delimited(&cm.to_delimited()).unwrap();
        assert_eq!(back, cm);
        let r = metrics_from_confusion(&cm).unwrap();
        assert!(r.to_table().contains("macro"));
        assert!(r.to_delimited().starts_with("metric,value\naccuracy,"));
    }
}
