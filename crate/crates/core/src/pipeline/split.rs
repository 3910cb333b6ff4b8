//! Stratified train/test split and stratified k-fold assignment.
//!
//! Both work on a slice of labels and return sorted index lists, so they can
//! be applied to any labelled collection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PipelineError;
use crate::wfdb::BeatClass;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub k_folds: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            k_folds: 5,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "train fraction {} must be in (0, 1)",
                self.train_fraction
            )));
        }
        if self.k_folds < 2 {
            return Err(PipelineError::Config(format!("k_folds {} must be >= 2", self.k_folds)));
        }
        Ok(())
    }
}

/// Indices of each class, shuffled with one seeded stream in class order.
fn shuffled_by_class(labels: &[BeatClass], seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = vec![Vec::new(); BeatClass::COUNT];
    for (i, l) in labels.iter().enumerate() {
        groups[l.index()].push(i);
    }
    for g in groups.iter_mut() {
        g.shuffle(&mut rng);
    }
    groups
}

/// Splits indices into `(train, test)`, class by class. Each present class
/// keeps `round(n * train_fraction)` members in train, clamped so both sides
/// get at least one.
pub fn split_dataset(labels: &[BeatClass], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    spec.validate()?;
    if labels.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, group) in shuffled_by_class(labels, spec.seed).into_iter().enumerate() {
        let n = group.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(PipelineError::ClassTooSmall {
                class: BeatClass::ALL[c],
                count: n,
                needed: 2,
            });
        }
        let k = ((n as f64 * spec.train_fraction).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&group[..k]);
        test.extend_from_slice(&group[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// `(fit, validate)` indices of one fold.
pub type FoldIndices = (Vec<usize>, Vec<usize>);

/// One `(fit, validate)` pair per fold. Within each class the shuffled members are
/// dealt round-robin over the folds, continuing from where the previous
/// class stopped so fold sizes stay balanced.
pub fn kfold(labels: &[BeatClass], k: usize, seed: u64) -> Result<Vec<FoldIndices>, PipelineError> {
    if k < 2 {
        return Err(PipelineError::Config(format!("k_folds {k} must be >= 2")));
    }
    if labels.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let mut fold_of = vec![0usize; labels.len()];
    let mut next = 0usize;
    for (c, group) in shuffled_by_class(labels, seed).into_iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        if group.len() < k {
            return Err(PipelineError::ClassTooSmall {
                class: BeatClass::ALL[c],
                count: group.len(),
                needed: k,
            });
        }
        for i in group {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (val, fit): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            (fit, val)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(per_class: usize) -> Vec<BeatClass> {
        (0..per_class * 8).map(|i| BeatClass::ALL[i % 8]).collect()
    }

    fn count(idx: &[usize], l: &[BeatClass], c: BeatClass) -> usize {
        idx.iter().filter(|&&i| l[i] == c).count()
    }

    #[test]
    fn seventy_thirty_per_class() {
        let l = labels(100);
        let (tr, te) = split_dataset(&l, &SplitSpec::default()).unwrap();
        for c in BeatClass::ALL {
            assert_eq!(count(&tr, &l, c), 70);
            assert_eq!(count(&te, &l, c), 30);
        }
    }

    #[test]
    fn split_is_partition_and_deterministic() {
        let l = labels(37);
        let spec = SplitSpec {
            seed: 9,
            ..SplitSpec::default()
        };
        let (tr, te) = split_dataset(&l, &spec).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..l.len()).collect::<Vec<_>>());
        assert_eq!(split_dataset(&l, &spec).unwrap(), (tr.clone(), te));
        let other = split_dataset(&l, &SplitSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(other.0, tr);
    }

    #[test]
    fn singleton_class_rejected() {
        let mut l = labels(5);
        l.retain(|&c| c != BeatClass::ALL[3]);
        l.push(BeatClass::ALL[3]);
        assert!(matches!(
            split_dataset(&l, &SplitSpec::default()),
            Err(PipelineError::ClassTooSmall { count: 1, .. })
        ));
        assert!(matches!(
            split_dataset(&[], &SplitSpec::default()),
            Err(PipelineError::EmptyDataset)
        ));
    }

    #[test]
    fn five_folds_of_fifty() {
        let l = labels(50);
        let folds = kfold(&l, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = vec![0; l.len()];
        for (fit, val) in &folds {
            for c in BeatClass::ALL {
                assert_eq!(count(val, &l, c), 10);
            }
            assert_eq!(fit.len() + val.len(), l.len());
            assert!(fit.iter().all(|i| !val.contains(i)));
            val.iter().for_each(|&i| seen[i] += 1);
        }
        assert!(seen.iter().all(|&s| s == 1));
        assert_eq!(kfold(&l, 5, 1).unwrap(), folds);
    }

    #[test]
    fn fold_needs_k_members() {
        let l = labels(4);
        assert!(matches!(
            kfold(&l, 5, 0),
            Err(PipelineError::ClassTooSmall { needed: 5, .. })
        ));
    }
}
