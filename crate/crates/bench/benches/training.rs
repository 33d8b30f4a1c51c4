//! Whole training runs, one per multiplier strategy.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ottr_core::dual::{BetaSchedule, BetaScheduleKind};
use ottr_core::trainer::{beta_setting, train, TrainConfig};
use ottr_core::updates::{TieRuleKind, UpdateKind};

fn grid_world_runs(c: &mut Criterion) {
    let wpo = UpdateKind::Wpo {
        tie_rule: TieRuleKind::Uniform,
    };
    let mut base = TrainConfig::new("grid-world", wpo, BetaSchedule::new(BetaScheduleKind::Optimal), 200, 10, 0.5);
    base.exact_metrics = false;
    let mut group = c.benchmark_group("train_grid_world");
    for setting in 1..=4 {
        let mut config = base.clone();
        config.beta_schedule = beta_setting(setting, config.iterations, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new("beta_setting", setting), &config, |b, config| {
            b.iter(|| train(config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid_world_runs);
criterion_main!(benches);
