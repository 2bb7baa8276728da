use std::hint::black_box;

use bqq_bench::{gaussian_fixture, lowrank_fixture};
use bqq_core::amfd::AnnealParams;
use bqq_core::baselines::{bcq::bcq, e8::e8_lvq, svd::svd_lowrank, uq::uq_grid, vq::vq_kmeans};
use bqq_core::bqq::solve_subproblem;
use bqq_core::linalg::jacobi_svd;
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_subproblem(c: &mut Criterion) {
    let w = lowrank_fixture(32);
    let params = AnnealParams {
        n_step: 100,
        ..AnnealParams::default()
    };
    let mut group = c.benchmark_group("subproblem");
    group.sample_size(10);
    group.bench_function("amfd_32x32_l16_100steps", |b| {
        b.iter(|| solve_subproblem(black_box(&w), &params, 16, 1).unwrap())
    });
    group.finish();
}

fn bench_baselines(c: &mut Criterion) {
    let w = gaussian_fixture(64);
    let mut group = c.benchmark_group("baselines_64x64");
    group.sample_size(10);
    group.bench_function("uq_grid_2bit", |b| {
        b.iter(|| uq_grid(black_box(&w), 2, 100).unwrap())
    });
    group.bench_function("bcq_2rounds", |b| {
        b.iter(|| bcq(black_box(&w), 2).unwrap())
    });
    group.bench_function("svd_rank8", |b| {
        b.iter(|| svd_lowrank(black_box(&w), 8).unwrap())
    });
    group.bench_function("vq_k64", |b| {
        b.iter(|| vq_kmeans(black_box(&w), 8, 64, 1, None).unwrap())
    });
    group.bench_function("e8_2rounds", |b| {
        b.iter(|| e8_lvq(black_box(&w), 2, Some(2)).unwrap())
    });
    group.finish();
}

fn bench_linalg(c: &mut Criterion) {
    let w = gaussian_fixture(64);
    let mut group = c.benchmark_group("linalg");
    group.sample_size(10);
    group.bench_function("jacobi_svd_64x64", |b| b.iter(|| jacobi_svd(black_box(&w))));
    group.finish();
}

criterion_group!(benches, bench_subproblem, bench_baselines, bench_linalg);
criterion_main!(benches);
