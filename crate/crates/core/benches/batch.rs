use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use graphfair::gen::gen_sweep_batch;
use graphfair::sweep::{run_batch, run_batch_sequential, SweepConfig};

fn sweep_batch(c: &mut Criterion) {
    let instances = gen_sweep_batch(500, 1);
    let config = SweepConfig::default();
    let mut group = c.benchmark_group("sweep_batch_500");
    group.sample_size(20);
    group.bench_function("parallel", |b| b.iter(|| run_batch(black_box(&instances), &config)));
    group.bench_function("sequential", |b| b.iter(|| run_batch_sequential(black_box(&instances), &config)));
    group.finish();
}

criterion_group!(benches, sweep_batch);
criterion_main!(benches);
