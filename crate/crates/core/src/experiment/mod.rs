//! Experiment orchestration: configuration, seed derivation, sweeps over
//! reset lengths, seeds and initial states, and their CSV outputs.

pub mod config;
pub mod output;
pub mod seeds;
pub mod sweep;
pub mod verify;

pub use config::{
    ExperimentConfig, Preset, ReservoirKind, SchemeSelection, TaskKind, ThresholdMode,
};
pub use seeds::{derive_seed, CellKey, RealizationSeeds, Scheme};
pub use sweep::{build_model, plan_cells, run_experiment, Experiment, SweepOutput};
pub use verify::{run_verify, Check};
