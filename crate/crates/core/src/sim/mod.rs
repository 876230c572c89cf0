//! Replicated bias experiments and their reports.

mod config;
mod emit;
mod experiment;
mod report;

pub use config::{ExperimentConfig, McmcSettings, ModelSpec, PosteriorSpec, SCHEMA_VERSION};
pub use emit::{emit, Format};
pub use experiment::run_experiment;
pub use report::{
    quantile_sorted, summarize, BiasRecord, BiasReport, ChainDiagnostics, ComponentSummary, Exclusion, FiveNumber,
};
