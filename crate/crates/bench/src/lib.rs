//! Benchmark-only crate. Run with `cargo bench -p kfactor-bench`.
