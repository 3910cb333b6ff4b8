use ecg2d::pipeline::{kfold, split_dataset, SplitSpec};
use ecg2d::BeatClass;
use proptest::prelude::*;

fn labels_from(counts: &[usize]) -> Vec<BeatClass> {
    let mut l = Vec::new();
    // interleave so class members are not contiguous
    let max = counts.iter().copied().max().unwrap_or(0);
    for i in 0..max {
        for (c, &n) in counts.iter().enumerate() {
            if i < n {
                l.push(BeatClass::ALL[c]);
            }
        }
    }
    l
}

proptest! {
    #[test]
    fn split_is_stratified_partition(
        counts in proptest::collection::vec(2usize..60, 8),
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let labels = labels_from(&counts);
        let spec = SplitSpec { train_fraction: fraction, k_folds: 5, seed };
        let (train, test) = split_dataset(&labels, &spec).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (c, &n) in counts.iter().enumerate() {
            let k = train.iter().filter(|&&i| labels[i] == BeatClass::ALL[c]).count();
            let want = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
            prop_assert_eq!(k, want);
        }
        prop_assert_eq!(split_dataset(&labels, &spec).unwrap(), (train, test));
    }

    #[test]
    fn folds_partition_the_train_set(
        counts in proptest::collection::vec(5usize..40, 8),
        k in 2usize..6,
        seed in any::<u64>(),
    ) {
        let labels = labels_from(&counts);
        let folds = kfold(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut hits = vec![0usize; labels.len()];
        for (fit, val) in &folds {
            prop_assert_eq!(fit.len() + val.len(), labels.len());
            for &i in val {
                hits[i] += 1;
            }
            for (c, &n) in counts.iter().enumerate() {
                let v = val.iter().filter(|&&i| labels[i] == BeatClass::ALL[c]).count();
                prop_assert!(v == n / k || v == n / k + 1);
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
        prop_assert_eq!(kfold(&labels, k, seed).unwrap(), folds);
    }
}
