//! Configuration, checkpoints, CSV/JSON artifacts, restart and verification.

mod artifacts;
mod checkpoint;
mod config;
mod csv;

pub use artifacts::{
    diagnose, load_trajectory, read_summary, resume_to_dir, run_to_dir, DiagnoseReport,
    LoadedTrajectory, ManifestEntry, RunManifest, RunSummary, CSV_NAME, MANIFEST_NAME,
    SUMMARY_NAME,
};
pub use checkpoint::{crc32, Checkpoint, MAGIC};
pub use config::{GridSpec, InitSpec, OutputSpec, RunSpec, SUPPORTED_PROFILES};
pub use csv::{csv_row, fmt_f64, HEADER};
