//! Global one-shot magnitude pruning and the measured pruning limit.

mod mask;
mod sweep;

pub use mask::{apply_mask, magnitude_mask, magnitude_order, masked_count, r_of_p, PruneState, RofP};
pub use sweep::{sweep, SweepResult, SweepRow, SweepSidecar, DEFAULT_TOLERANCE_POINTS};
