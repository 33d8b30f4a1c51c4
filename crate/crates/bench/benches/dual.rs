//! Multiplier solvers on a Taxi-sized problem (500 states, 6 actions).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ottr_bench::random_problem;
use ottr_core::dual::{solve_kl_multiplier, solve_sinkhorn_dual, solve_wasserstein_dual, solve_zero_one_dual_global};
use ottr_core::CostPreset;

fn multipliers(c: &mut Criterion) {
    let zero_one = random_problem(500, 6, CostPreset::ZeroOne, 0.1, 7);
    let l1 = random_problem(500, 6, CostPreset::L1Index, 0.1, 7);
    let mut group = c.benchmark_group("dual");
    group.bench_function("breakpoint_zero_one", |b| b.iter(|| solve_wasserstein_dual(black_box(&zero_one)).unwrap()));
    group.bench_function("breakpoint_l1", |b| b.iter(|| solve_wasserstein_dual(black_box(&l1)).unwrap()));
    group.bench_function("zero_one_multistart", |b| {
        b.iter(|| solve_zero_one_dual_global(black_box(&zero_one)).unwrap())
    });
    group.bench_function("sinkhorn_lambda_10", |b| b.iter(|| solve_sinkhorn_dual(black_box(&l1), 10.0).unwrap()));
    group.bench_function("kl_bisection", |b| b.iter(|| solve_kl_multiplier(black_box(&l1)).unwrap()));
    group.finish();
}

criterion_group!(benches, multipliers);
criterion_main!(benches);
