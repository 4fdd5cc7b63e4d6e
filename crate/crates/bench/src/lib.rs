//! Benchmarks for the greedyjump toolkit; see `benches/dynamics.rs`.
