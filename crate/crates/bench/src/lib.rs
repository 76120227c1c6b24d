//! Criterion benchmarks for `reasonsynth-core`; see `benches/`.
