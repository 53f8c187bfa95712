//! Benchmarks over the catalog systems; see `benches/`.
