use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use citecast_bench::{bench_cohort, bench_shapes};
use citecast_core::clustering::kmeans_cluster;
use citecast_core::fitting::{fit_series, FitConfig};
use citecast_core::models::sir::{sir_counts_at_years, SirParams};
use citecast_core::models::wsb::{wsb_counts, WsbParams};
use citecast_core::ModelKind;

fn curve_eval(c: &mut Criterion) {
    let grid: Vec<f64> = (1..=50).map(|t| t as f64).collect();
    let wsb = WsbParams { lambda: 2.0, mu: 1.2, sigma: 0.9, m: 30.0 };
    c.bench_function("wsb_counts_50y", |b| {
        b.iter(|| wsb_counts(black_box(&wsb), black_box(&grid)).unwrap())
    });

    let sir = SirParams { s0: 500.0, beta: 0.8, gamma: 0.15, i0: 1.0 };
    c.bench_function("sir_counts_50y_step_0.01", |b| {
        b.iter(|| sir_counts_at_years(black_box(&sir), 50, 0.01).unwrap())
    });
}

fn model_fits(c: &mut Criterion) {
    let cohort = bench_cohort(4);
    let histories = cohort.histories();
    let counts = histories[0].counts_f64();
    let sir_counts = histories[3].counts_f64();
    let config = FitConfig::new((1, 10));

    let mut group = c.benchmark_group("fit_train_window");
    group.sample_size(20);
    group.bench_function("wsb", |b| {
        b.iter(|| fit_series("bench", black_box(&counts), ModelKind::Wsb, &config).unwrap())
    });
    group.bench_function("sir", |b| {
        b.iter(|| fit_series("bench", black_box(&sir_counts), ModelKind::Sir, &config).unwrap())
    });
    group.bench_function("arima", |b| {
        b.iter(|| fit_series("bench", black_box(&counts), ModelKind::Arima, &config).unwrap())
    });
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let shapes = bench_shapes(400);
    let mut group = c.benchmark_group("kmeans");
    group.sample_size(10);
    group.bench_function("400_shapes_k4_20_restarts", |b| {
        b.iter_batched(
            || shapes.clone(),
            |s| kmeans_cluster(&s, 4, 20, 7).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, curve_eval, model_fits, clustering);
criterion_main!(benches);
