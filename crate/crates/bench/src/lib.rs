//! Criterion benchmarks for `commsearch-core`; see `benches/`.
