//! Time evolution of the switching probability and its fading-memory structure.

mod fading;
mod propagate;
mod signal;
mod weighting;

pub use fading::{
    ct_fading_functional, ct_filter, dt_fading_functional, dt_filter, truncation_depth, truncation_horizon,
    FadingOptions, FilterOutput, Padding,
};
pub use propagate::{
    dt_gain, dt_step, hold_map, log_transition, output_grid, propagate, propagate_with, steady_state, transition,
    PropagateOptions, SwitchState, Trajectory,
};
pub use signal::{BiasSignal, SignalKind};
pub use weighting::{
    ct_admissibility, dt_admissibility, DtAdmissibility, SeriesVerdict, WeightShape, WeightingFunction,
    WeightingSequence,
};
