use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use resilient_nc::harness::{self, Executor, TrialConfig};

fn config(scheme: &str, topo: &str, extra: &[(&str, &str)]) -> TrialConfig {
    let mut c = TrialConfig::default();
    c.set("scheme", scheme).unwrap();
    c.load_topology(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../topologies").join(topo)).unwrap();
    c.set("trials", "200").unwrap();
    for (k, v) in extra {
        c.set(k, v).unwrap();
    }
    c
}

fn executors(c: &mut Criterion) {
    let cases = [
        ("rs", config("rs", "c3.topo", &[("adversary", "random,forger")])),
        ("co", config("co", "c4.topo", &[("n", "256")])),
        ("pk", config("pk", "wide-butterfly.topo", &[("n", "256"), ("q", "65521")])),
    ];
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for (name, cfg) in &cases {
        for (label, executor) in [("sequential", Executor::Sequential), ("parallel", Executor::Parallel)] {
            group.bench_with_input(BenchmarkId::new(label, name), cfg, |b, cfg| {
                b.iter(|| harness::run(cfg, executor).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, executors);
criterion_main!(benches);
