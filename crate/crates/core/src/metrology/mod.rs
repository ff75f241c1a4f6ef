//! Phase encoding, response fitting and sensitivity estimation.
//!
//! A sweep along the ray `phi = alpha (cos Theta, sin Theta)` is fitted per
//! channel; the phase uncertainties follow from error propagation through
//! the fitted mean slope and spread.

mod fit;
mod gain;
mod phase;

pub use fit::{fit_response, ChannelFit, ResponseFit, SweepSample, MIN_SHOTS, MIN_SWEEP_POINTS};
pub use gain::{
    gain, gain_with, scatter_summary, sensitivity, sql, GainResult, Scatter, SqlMode,
    MAX_PHASE_UNCERTAINTY,
};
pub use phase::{
    alignment_angle, encode_phases, quench_schedule, spinor_phase_rotation, PhasePoint,
    PRE_QUENCH_RATIO,
};
