//! Criterion benchmarks for the optdiff numerical kernels live in `benches/`.
