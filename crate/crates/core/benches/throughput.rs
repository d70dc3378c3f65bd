//! Sequential against parallel execution for the two hot paths: scoring a
//! batch with every reference measure, and growing a forest.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sprout_core::classifiers::{ClassifierConfig, ForestConfig, RandomForest};
use sprout_core::data::{make_blobs, split, SplitSpec};
use sprout_core::par::Execution;
use sprout_core::uncertainty::{compute_batch, fit_measures, reference_measures};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn scoring(c: &mut Criterion) {
    let data = make_blobs(3000, 8, 2, 1.2, 1).unwrap();
    let (train, test) = split(&data, &SplitSpec::new(0.3, 1)).unwrap();
    let clf = ClassifierConfig::GaussianNb.fit(&train, 1).unwrap();
    let (fitted, _) =
        fit_measures(&reference_measures(), &train, &clf, 1, Execution::default()).unwrap();
    let mut group = c.benchmark_group("compute_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, test.len()), &exec, |b, &exec| {
            b.iter(|| compute_batch(&fitted, &test, &clf, exec).unwrap())
        });
    }
    group.finish();
}

fn forest(c: &mut Criterion) {
    let data = make_blobs(4000, 8, 2, 1.2, 2).unwrap();
    let cfg = ForestConfig {
        n_trees: 30,
        ..ForestConfig::default()
    };
    let mut group = c.benchmark_group("forest_fit");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, cfg.n_trees), &exec, |b, &exec| {
            b.iter(|| RandomForest::fit_with(&data, &cfg, 2, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, scoring, forest);
criterion_main!(benches);
