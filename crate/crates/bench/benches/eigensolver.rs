use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nelson_ibc::spectral::ibc_ground_state;
use nelson_ibc::{build_h_lambda, lowest_eigenpairs, EigenOptions, IbcConfig};
use nelson_ibc_bench::space;

fn ground_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_state");
    group.sample_size(10);
    for m in [16, 32] {
        let s = space(m, 8);
        let h = build_h_lambda(&s, 32.0).unwrap();
        let opts = EigenOptions::default();
        group.bench_with_input(BenchmarkId::new("h_lambda", m), &m, |b, _| {
            b.iter(|| lowest_eigenpairs(&h, &opts).unwrap())
        });
        let s2 = Arc::clone(&s);
        group.bench_with_input(BenchmarkId::new("h_ibc", m), &m, |b, _| {
            b.iter(|| ibc_ground_state(&s2, IbcConfig::new(1.0).unwrap(), &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ground_state);
criterion_main!(benches);
