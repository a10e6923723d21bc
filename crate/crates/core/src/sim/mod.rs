//! Simulation laboratory: scenario grid, data generation, per-replicate
//! coverage and length, and scenario summaries.

mod generate;
mod grid;
mod measures;
mod rng;
mod runner;

pub use generate::{generate_dataset, GeneratedDataset, GeneratedStudy};
pub use grid::{
    build_grid, GridConfig, RunSettings, SampleSize, Scenario, DEFAULT_K, DEFAULT_N, DEFAULT_TAU2,
    GROUP_VARIANCE, MIXED_SIZES,
};
pub use measures::{
    coverage, summarize, theoretical_length, theoretical_length_at, CoverageStats, Histogram,
    HIGH_COVERAGE,
};
pub use rng::{substream, substream_seed, SimRng, Stream, GENERATOR_ID};
pub use runner::{
    run_replicate, run_scenario, summarize_scenario, FailureReason, MethodOutcome, MethodSummary,
    ReplicateRecord, ScenarioRun, ScenarioSummary, MAX_FAILURE_RATE,
};
