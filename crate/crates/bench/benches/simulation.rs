use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use coopreg_bench::fixture_source;
use coopreg_cli::parse_scenario;
use coopreg_core::simkit::run;

fn bench_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for name in [
        "harmonic_chain",
        "jointly_connected_cycle",
        "discrete_rotation",
    ] {
        let loaded = parse_scenario(&fixture_source(name)).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| run(black_box(&loaded.scenario), &loaded.law, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulation);
criterion_main!(benches);
