//! Benchmarks for driftlab; see `benches/`.
