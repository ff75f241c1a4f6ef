//! Simultaneous single-shot readout of `Q_yz` and `Q_xz`.
//!
//! The side modes are recombined into `a_S` and `a_A`, the `m = 0` pump is
//! split into two local oscillators a quarter period apart, and each signal
//! is mixed with its pump so that a population difference in F = 2 is
//! proportional to one quadrature. [`ideal`] implements the transform in
//! closed form with the calibrated noise channels; [`pulses`] builds the same
//! map from individual microwave couplings.

pub mod ideal;
mod kunkel;
mod levels;
mod noise;
pub mod pulses;

pub use ideal::{
    add_crosstalk, homodyne_outputs, measure, readout, split_pump, split_signal, MeasurementRecord,
};
pub use kunkel::{kunkel_measure, squeezing_parameter};
pub use levels::{ExtendedAmplitudes, Level};
pub use noise::{NoiseConfig, PhaseNoise};
pub use pulses::{measure_with_pulses, pulse_sequence, Pulse, PulseProgram};
