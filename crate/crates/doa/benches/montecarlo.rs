//! Whole-sweep throughput: one worker versus the default pool.

use criterion::{criterion_group, criterion_main, Criterion};
use doa::harness::{run_experiment, ExperimentConfig, RunOptions};

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
        [geometry]
        sensors = 10

        [scenario]
        doas_deg = [88.5, 91.5]
        snapshots = 10

        [sweep]
        axis = "snr_db"
        values = [10.0]

        [run]
        trials = 40
        base_seed = 3
        grid_step_deg = 1.0

        [[methods]]
        variant = "jio"
        rank = 4

        [[methods]]
        variant = "jio-rls"
        rank = 4
        "#,
    )
    .unwrap()
}

fn bench_montecarlo(c: &mut Criterion) {
    let config = sweep_config();
    let mut group = c.benchmark_group("sweep_m10_40trials");
    group.sample_size(10);
    group.bench_function("threads-1", |b| {
        let options = RunOptions {
            threads: Some(1),
            ..RunOptions::default()
        };
        b.iter(|| run_experiment(&config, &options).unwrap());
    });
    group.bench_function("threads-default", |b| {
        b.iter(|| run_experiment(&config, &RunOptions::default()).unwrap());
    });
    group.finish();
}

criterion_group!(benches, bench_montecarlo);
criterion_main!(benches);
