//! Configuration, presets, orchestration and persistence for figure runs.

pub mod config;
pub mod figures;
pub mod ingest;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod presets;

pub use config::{DeviceConfig, Overrides};
pub use ingest::ingest_transmission;
pub use manifest::RunManifest;
pub use pipeline::{run_pipeline, sweep_taper_length, Artifacts, Stage};
pub use presets::Preset;
