//! Benchmark-only crate; the measured workloads live under `benches/`.
