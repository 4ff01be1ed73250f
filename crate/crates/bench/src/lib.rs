//! Criterion benchmarks for `sbmtest`; the benchmarks live in `benches/`.
