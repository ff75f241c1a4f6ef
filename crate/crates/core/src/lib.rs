//! Simulation and analysis of spin-nematic squeezing in a spin-1 condensate,
//! its simultaneous two-quadrature readout, and two-phase estimation.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: exact many-body Fock-space representation used as a
//!   brute-force oracle at small atom numbers.
//! * [`twa`]: truncated-Wigner Monte Carlo engine (sampling, stochastic
//!   integration with atom loss, deterministic parallel reduction).
//! * [`measurement`]: the microwave readout that maps `Q_yz` and `Q_xz` onto
//!   population differences, with calibrated noise channels.
//! * [`metrology`]: state preparation, phase encoding, response fitting,
//!   sensitivities, standard quantum limits and metrological gain.
//! * [`pipeline`]: end-to-end single-shot experiment composition.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod measurement;
pub mod metrology;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod twa;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use measurement::{ExtendedAmplitudes, MeasurementRecord, NoiseConfig, PulseProgram};
pub use metrology::{GainResult, PhasePoint, ResponseFit, SqlMode};
pub use pipeline::{Experiment, ExperimentConfig};
pub use rng::{seed_derive, SubstreamKey};
pub use twa::{EnsembleMoments, ModeAmplitudes, SimConfig};
