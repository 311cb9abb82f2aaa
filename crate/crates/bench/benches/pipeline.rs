use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kidrank_bench::*;
use kidrank_core::censoring::{censor_dataset, CensorConfig};
use kidrank_core::explain::{global_importance, treeshap};
use kidrank_core::features::featurize;
use kidrank_core::ingest::synth::generate_synthetic;
use kidrank_core::learners::fit_gbm;

fn generation(c: &mut Criterion) {
    let cfg = generator(500);
    let mut g = c.benchmark_group("generate");
    g.sample_size(10);
    g.bench_function("500_donors", |b| {
        b.iter(|| generate_synthetic(black_box(&cfg)).unwrap())
    });
    g.finish();
}

fn features_and_censoring(c: &mut Criterion) {
    let ds = dataset(2000);
    let ctx = context(&ds);
    let mut g = c.benchmark_group("prepare");
    g.sample_size(10);
    g.bench_function("feature_context", |b| b.iter(|| context(black_box(&ds))));
    g.bench_function("featurize_2000_donors", |b| {
        b.iter(|| featurize(&ctx, black_box(&ds), &ds.match_runs).unwrap())
    });
    g.bench_function("censor_2000_donors", |b| {
        b.iter(|| censor_dataset(black_box(&ds), &CensorConfig::default()).unwrap())
    });
    g.finish();
}

fn learning_and_shap(c: &mut Criterion) {
    let table = censored_table(&dataset(2000));
    let model = gbm(&table, 100);
    let mut g = c.benchmark_group("model");
    g.sample_size(10);
    g.bench_function("gbm_fit_100_trees", |b| {
        b.iter(|| fit_gbm(black_box(&table.matrix), &table.labels, &gbm_params(100)).unwrap())
    });
    g.bench_function("treeshap_one_row", |b| {
        b.iter(|| treeshap(&model, black_box(table.matrix.row(0))).unwrap())
    });
    let head = table
        .matrix
        .select_rows(&(0..table.n_rows().min(500)).collect::<Vec<_>>());
    g.bench_function("global_importance_500_rows", |b| {
        b.iter(|| global_importance(&model, black_box(&head)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, generation, features_and_censoring, learning_and_shap);
criterion_main!(benches);
