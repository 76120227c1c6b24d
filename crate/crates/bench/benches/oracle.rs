use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use reasonsynth_core::oracle::{solve_abduct, solve_induct};
use reasonsynth_core::pipeline::GeneratorConfig;
use reasonsynth_core::{derive_rng, generate_triple, SymbolSpaceConfig, TermTriple};

fn sample(n: u64) -> Vec<TermTriple> {
    let config = SymbolSpaceConfig::default();
    (0..n)
        .map(|i| generate_triple(&config, &mut derive_rng(2, "bench-oracle", i)).unwrap())
        .collect()
}

fn oracles(c: &mut Criterion) {
    let bounds = GeneratorConfig::default().bounds();
    let triples = sample(256);
    let mut i = 0;
    c.bench_function("solve_abduct", |b| {
        b.iter_batched(
            || {
                i = (i + 1) % triples.len();
                &triples[i]
            },
            |t| black_box(solve_abduct(&t.split, &t.rule, &t.result, &bounds)),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("solve_induct", |b| {
        b.iter_batched(
            || {
                i = (i + 1) % triples.len();
                &triples[i]
            },
            |t| black_box(solve_induct(&t.split, &t.case, &t.result, &bounds)),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, oracles);
criterion_main!(benches);
