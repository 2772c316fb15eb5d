//! Criterion benchmarks for the rendering, perception and episode hot paths.
//! Run with `cargo bench -p clothslide-bench`.
