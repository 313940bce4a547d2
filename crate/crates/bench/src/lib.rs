//! Criterion benchmarks for the hot paths of `vdc-core`; see `benches/`.
