//! End-to-end experiment composition: quench, squeeze, align, encode and
//! read out, plus the scans built from it.

mod calibration;
mod experiment;
mod scans;

pub use calibration::{detect_calib, linear_fit, rf_calib, DetectCalibRow, LinearFit, RfCalibRow};
pub use experiment::{Experiment, ExperimentConfig, PointRun, Probe, ReadoutModel};
pub use scans::{
    compare_readouts, gain_map, noise_sweep, optimal_time, scan_squeeze_time, sweep_sample,
    time_grid, GainMapConfig, GridPoint, NoiseSweepRow, RayResult, ReadoutComparison, TimeScanRow,
};
