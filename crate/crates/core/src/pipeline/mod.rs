//! Orchestration: config files, staged execution with content-hash caching,
//! and the reports the CLI writes.

mod config;
mod manifest;
mod run;

pub use config::{DataSpec, EscapeConfig, RunConfig, SpectrumConfig, SpectrumMode, SweepConfig, Task};
pub use manifest::{hash_file, sha256_hex, DirLock, Manifest, StageRecord, LOCK_FILE, MANIFEST_FILE};
pub use run::{
    cmd_full, cmd_verify_escape, run_task, stage_seed, EpsilonInfo, EscapeRow, Outcome, Report, SpectrumInfo,
    CHECKPOINT_FILE, CURVE_FILE, CURVE_INFO_FILE, DENSITY_FILE, EPSILON_FILE, ESCAPE_FILE, ESCAPE_FLOOR, ESCAPE_LIMIT,
    HISTORY_FILE, REPORT_FILE, REPORT_TEXT_FILE, SPECTRUM_FILE, SPECTRUM_INFO_FILE, SWEEP_FILE, SWEEP_INFO_FILE,
};
