use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use losscal_core::{
    argmin_oracle_binary, loss_correct_binary, loss_correct_multi, optimal_score_multi,
    prior_shift_correct, LossSpec, PosteriorBelief, WeightMatrix,
};
use std::hint::black_box;

fn binary(c: &mut Criterion) {
    let scores: Vec<f64> = (1..10_000).map(|i| i as f64 / 10_000.0).collect();
    c.bench_function("loss_correct_binary/10k", |b| {
        b.iter(|| {
            scores
                .iter()
                .map(|&a| loss_correct_binary(black_box(0.99), a).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("prior_shift_correct/10k", |b| {
        b.iter(|| {
            scores
                .iter()
                .map(|&a| prior_shift_correct(black_box(0.0101), a).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("argmin_oracle_binary/100001", |b| {
        b.iter(|| argmin_oracle_binary(&LossSpec::log_loss(), 0.9, black_box(0.3), 100_001))
    });
}

fn multi(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_correct_multi");
    for n in [2usize, 3, 5, 10] {
        let beta = WeightMatrix::from_rows(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 2.0 + i as f64 } else { 1.0 }).collect())
                .collect(),
        )
        .unwrap();
        let masses: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let gamma = PosteriorBelief::from_masses(&masses).unwrap();
        let scores = optimal_score_multi(&beta, &gamma).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &scores, |b, s| {
            b.iter(|| loss_correct_multi(&beta, black_box(s)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, binary, multi);
criterion_main!(benches);
