//! Truncated-Wigner simulation of single-mode spin mixing with atom loss.
//!
//! Each trajectory starts from a Wigner sample of the polar state, is
//! integrated with Euler-Maruyama through the stochastic mean-field equations
//! (one-body loss enters as damping plus vacuum noise), and ensemble moments
//! of Weyl symbols stand in for symmetrically ordered quantum expectations.

mod amplitudes;
mod config;
mod engine;
mod ensemble;

pub use amplitudes::{classical_observables, ModeAmplitudes, Observables};
pub use config::{PreQuench, SimConfig, DRIFT_TOLERANCE};
pub use engine::{
    check_abort_budget, drift, evolve, run_trajectories, sample_coherent, sample_initial, step,
    TrajectorySet, ABORT_BUDGET,
};
pub use ensemble::{
    run_ensemble, run_ensemble_labeled, Channel, EnsembleMoments, MomentsAt, ENSEMBLE_STREAM,
};
