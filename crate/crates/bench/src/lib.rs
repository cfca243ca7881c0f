//! Benchmarks live in `benches/`; run them with `cargo bench -p cr-orient-bench`.
