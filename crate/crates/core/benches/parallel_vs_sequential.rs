use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ecg2d::beatset::BeatSegment;
use ecg2d::nn::{image_tensor, CnnModel, CnnSpec, HeadMode, LossKind, Tensor};
use ecg2d::pipeline::dataset::samples_from_beats;
use ecg2d::pipeline::evaluate;
use ecg2d::spectro::SpectrogramConfig;
use ecg2d::{BeatClass, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn beats(n: usize) -> Vec<BeatSegment> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|i| BeatSegment {
            samples: (0..512).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            label: BeatClass::ALL[i % BeatClass::COUNT],
            record_name: "bench".into(),
            center_index: i,
        })
        .collect()
}

fn spectrograms(c: &mut Criterion) {
    let segments = beats(64);
    let cfg = SpectrogramConfig::default();
    let mut group = c.benchmark_group("spectrograms_64_beats");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| samples_from_beats(black_box(&segments), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn training_step(c: &mut Criterion) {
    let samples = samples_from_beats(&beats(16), &SpectrogramConfig::default(), Execution::Sequential).unwrap();
    let images: Vec<Tensor> = samples.iter().map(|s| image_tensor(&s.image)).collect();
    let refs: Vec<&Tensor> = images.iter().collect();
    let targets: Vec<usize> = samples.iter().map(|s| s.label.index()).collect();
    let model = CnnModel::init(CnnSpec::reference(64, HeadMode::GlobalAvgPool), 0).unwrap();
    let mut group = c.benchmark_group("forward_backward_16x64x64");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let fwd = model.forward_batch(black_box(&refs), exec).unwrap();
                model.backward(&fwd, &targets, LossKind::BinaryPerClass, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let samples = samples_from_beats(&beats(32), &SpectrogramConfig::default(), Execution::Sequential).unwrap();
    let refs: Vec<_> = samples.iter().collect();
    let model = CnnModel::init(CnnSpec::reference(64, HeadMode::GlobalAvgPool), 0).unwrap();
    let mut group = c.benchmark_group("evaluate_32x64x64");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate(&model, black_box(&refs), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectrograms, training_step, evaluation);
criterion_main!(benches);
