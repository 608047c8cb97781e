//! Configuration files, experiment orchestration and artifacts.

mod config;
pub mod csv;
pub mod presets;
mod run;
pub mod svg;

pub use config::{
    default_grid, required_grid_points, turning_points, validate_config, BackendKind,
    ClassicalityConfig, ExperimentConfig, HistogramConfig, SnapshotConfig, StrobeConfig, Task,
};
pub use run::{run_experiment, strobe_samples, Artifact, Manifest, RunArtifacts};
