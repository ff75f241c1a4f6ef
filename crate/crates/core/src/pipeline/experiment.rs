use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measurement::{
    measure, measure_with_pulses, MeasurementRecord, NoiseConfig, PulseProgram,
};
use crate::metrology::{
    alignment_angle, encode_phases, quench_schedule, spinor_phase_rotation, PhasePoint,
};
use crate::rng::seed_derive;
use crate::twa::{check_abort_budget, evolve, sample_initial, ModeAmplitudes, SimConfig};
use crate::{Error, Result};

/// Input state of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    /// Uncorrelated polar state, no spin-mixing evolution.
    Polar,
    /// Spin-nematic squeezed state after quench and evolution at `q0`.
    #[default]
    Squeezed,
}

/// How the two quadratures are mapped onto populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutModel {
    /// Closed-form transform with crosstalk, pump-phase and detection noise.
    #[default]
    Homodyne,
    /// Explicit pulse program; detection noise only.
    Pulses,
}

/// One simulated experiment: preparation, encoding and readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Condensate physics. `n_traj`, `t_end` and `record_times` are unused.
    pub sim: SimConfig,
    pub probe: Probe,
    /// Evolution time after the quench (s).
    pub squeeze_time: f64,
    /// Hold at the pre-quench `q` before switching to `q0` (s).
    pub hold: f64,
    /// Spinor phase applied before encoding; defaults to the alignment angle.
    pub spinor_angle: Option<f64>,
    pub noise: NoiseConfig,
    pub readout: ReadoutModel,
    /// Program used by [`ReadoutModel::Pulses`]; solved from `eps1, eps2`
    /// when absent.
    pub pulse_program: Option<PulseProgram>,
    /// Shots per phase point.
    pub shots: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sim: SimConfig::paper_defaults(),
            probe: Probe::Squeezed,
            squeeze_time: 0.064,
            hold: 0.01,
            spinor_angle: None,
            noise: NoiseConfig::calibrated(),
            readout: ReadoutModel::Homodyne,
            pulse_program: None,
            shots: 100,
        }
    }
}

/// A validated experiment with its derived q program and pulse program.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    physics: SimConfig,
    program: Option<PulseProgram>,
    spinor_angle: f64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.sim.validate()?;
        config.noise.validate()?;
        if !(config.squeeze_time >= 0.0 && config.squeeze_time.is_finite()) {
            return Err(Error::Config(format!(
                "squeeze_time must be non-negative, got {}",
                config.squeeze_time
            )));
        }
        if !(config.hold >= 0.0 && config.hold.is_finite()) {
            return Err(Error::Config(format!(
                "hold must be non-negative, got {}",
                config.hold
            )));
        }
        if config.shots < 2 {
            return Err(Error::Config(format!(
                "at least 2 shots per point required, got {}",
                config.shots
            )));
        }
        let program = match (config.readout, &config.pulse_program) {
            (ReadoutModel::Homodyne, _) => None,
            (ReadoutModel::Pulses, Some(p)) => {
                p.validate()?;
                Some(p.clone())
            }
            (ReadoutModel::Pulses, None) => Some(PulseProgram::for_splitting(
                config.noise.eps1,
                config.noise.eps2,
            )?),
        };
        let spinor_angle = config
            .spinor_angle
            .unwrap_or_else(|| alignment_angle(config.sim.c2));
        let physics = quench_schedule(&config.sim, config.hold);
        Ok(Experiment {
            config,
            physics,
            program,
            spinor_angle,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Condensate configuration including the pre-quench hold.
    pub fn physics(&self) -> &SimConfig {
        &self.physics
    }

    pub fn spinor_angle(&self) -> f64 {
        self.spinor_angle
    }

    /// Nominal atom number, used for the SQL reference.
    pub fn n_atoms(&self) -> f64 {
        self.config.sim.n_atoms as f64
    }

    /// Probe amplitudes at each of `times` after the quench, aligned and
    /// ready for encoding. `None` if the trajectory diverged.
    pub fn prepare_at<R: rand::Rng + ?Sized>(
        &self,
        times: &[f64],
        rng: &mut R,
    ) -> Option<Vec<ModeAmplitudes>> {
        let psi = sample_initial(self.n_atoms(), rng);
        match self.config.probe {
            Probe::Polar => Some(vec![psi; times.len()]),
            Probe::Squeezed => {
                let states = evolve(&self.physics, times, psi, rng)?;
                Some(
                    states
                        .iter()
                        .map(|s| spinor_phase_rotation(s, self.spinor_angle))
                        .collect(),
                )
            }
        }
    }

    pub fn prepare<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Option<ModeAmplitudes> {
        self.prepare_at(&[self.config.squeeze_time], rng)
            .map(|v| v[0])
    }

    /// Reads out an already encoded state.
    pub fn measure<R: rand::Rng + ?Sized>(
        &self,
        psi: &ModeAmplitudes,
        shot: u64,
        rng: &mut R,
    ) -> MeasurementRecord {
        self.measure_with(psi, &self.config.noise, shot, rng)
    }

    pub fn measure_with<R: rand::Rng + ?Sized>(
        &self,
        psi: &ModeAmplitudes,
        noise: &NoiseConfig,
        shot: u64,
        rng: &mut R,
    ) -> MeasurementRecord {
        match &self.program {
            None => measure(psi, noise, shot, rng),
            Some(p) => measure_with_pulses(psi, p, noise, shot, rng)
                .expect("pulse program validated at construction"),
        }
    }

    /// One shot on substream `seed_derive(sim.seed, label, index)`.
    pub fn shot(&self, p: PhasePoint, label: &str, index: u64) -> Option<MeasurementRecord> {
        let mut rng = seed_derive(self.config.sim.seed, label, index).rng();
        let psi = self.prepare(&mut rng)?;
        Some(self.measure(&encode_phases(&psi, p), index, &mut rng))
    }

    /// All shots of one phase point; diverged shots are dropped and counted
    /// against the abort budget.
    pub fn run_point(&self, p: PhasePoint, label: &str) -> Result<PointRun> {
        let results: Vec<Option<MeasurementRecord>> = (0..self.config.shots)
            .into_par_iter()
            .map(|i| self.shot(p, label, i))
            .collect();
        let total = results.len();
        let records: Vec<MeasurementRecord> = results.into_iter().flatten().collect();
        let aborted = total - records.len();
        check_abort_budget(aborted, total)?;
        Ok(PointRun {
            phase: p,
            records,
            aborted,
        })
    }
}

/// Shots recorded at one phase point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRun {
    pub phase: PhasePoint,
    pub records: Vec<MeasurementRecord>,
    pub aborted: usize,
}
