//! Synthetic networks and timing scenarios.

pub mod harness;
pub mod synth;

pub use harness::{
    bench_pruning, bench_scalability, bench_team_size_sweep, log_log_slope, time_runs, BenchConfig, BenchRecord,
    BenchReport, BenchRow, SCHEMA_VERSION,
};
pub use synth::{generate_network, pick_team, subsample_edges, AttachmentModel, SyntheticSpec};
