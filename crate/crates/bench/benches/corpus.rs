use copyless_bench::{corpus_program, VERIFIED};
use copyless_core::{explore, verify_program, Bounds, VerifierOptions};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    for name in VERIFIED {
        let prog = corpus_program(name);
        group.bench_function(name, |b| b.iter(|| verify_program(black_box(&prog), &VerifierOptions::default())));
    }
    group.finish();
}

fn exploration(c: &mut Criterion) {
    let mut group = c.benchmark_group("explore");
    group.sample_size(20);
    for name in VERIFIED {
        let prog = corpus_program(name);
        group.bench_function(name, |b| b.iter(|| explore(black_box(&prog), &Bounds::default())));
    }
    group.finish();
}

criterion_group!(benches, verify, exploration);
criterion_main!(benches);
