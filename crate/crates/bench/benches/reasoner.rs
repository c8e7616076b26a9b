use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use normcase_bench::{event_log, fixture, state_after};
use normcase_core::fixtures::QUITTANCE;
use normcase_core::{ActRequest, Model, ReasonerState};

fn compile(c: &mut Criterion) {
    c.bench_function("compile_fixture", |b| {
        b.iter(|| Model::from_source(black_box(QUITTANCE)).unwrap())
    });
}

fn query(c: &mut Criterion) {
    let state = state_after(40);
    c.bench_function("act_statuses", |b| b.iter(|| black_box(&state).act_statuses()));
    let req = ActRequest::new("approve-quittance", "alice").to("client");
    c.bench_function("what_if", |b| b.iter(|| black_box(&state).what_if(&req).unwrap()));
}

fn persistence(c: &mut Criterion) {
    let model = fixture();
    let mut group = c.benchmark_group("persistence");
    for n in [10usize, 100, 1000] {
        let log = event_log(n);
        let state = ReasonerState::replay(Arc::clone(&model), &log).unwrap();
        let snapshot = state.snapshot();
        group.bench_with_input(BenchmarkId::new("replay", n), &log, |b, log| {
            b.iter(|| ReasonerState::replay(Arc::clone(&model), log).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("snapshot", n), &state, |b, s| b.iter(|| s.snapshot()));
        group.bench_with_input(BenchmarkId::new("restore", n), &snapshot, |b, text| {
            b.iter(|| ReasonerState::restore(Arc::clone(&model), text).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, compile, query, persistence);
criterion_main!(benches);
