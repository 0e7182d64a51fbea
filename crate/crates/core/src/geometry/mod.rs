//! Gaussian widths of loss-sublevel ellipsoids, the pruning-threshold curve
//! and its fixed point, and Monte Carlo checks of the underlying geometry.

mod montecarlo;
mod phase;
mod width;

pub use montecarlo::{escape_bound, escape_mc, jensen_ratio, mc_width_oracle, EscapeEstimate, McEstimate};
pub use phase::{magnitude_scale_experiment, solve_phase_transition, CurveSidecar, Degenerate, ThresholdCurve, CURVE_POINTS};
pub use width::{gaussian_width, projected_width, threshold, EllipsoidSpec, WIDTH_FLOOR};
