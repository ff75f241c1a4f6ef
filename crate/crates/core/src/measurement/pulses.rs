use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ideal::{readout, MeasurementRecord};
use super::levels::{ExtendedAmplitudes, Level};
use super::noise::NoiseConfig;
use crate::twa::ModeAmplitudes;
use crate::{Error, Result, C64};

/// Resonant coupling of `lower` (F = 1) and `upper` (F = 2) by a rotation of
/// `angle` about an equatorial axis at `phase`:
///
/// `a_l -> cos(angle/2) a_l - i e^{-i phase} sin(angle/2) a_u`,
/// `a_u -> -i e^{i phase} sin(angle/2) a_l + cos(angle/2) a_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub lower: Level,
    pub upper: Level,
    pub angle: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Pulse {
    pub fn new(lower: Level, upper: Level, angle: f64, phase: f64) -> Self {
        Pulse {
            lower,
            upper,
            angle,
            phase,
        }
    }

    fn validate(&self) -> Result<()> {
        self.lower.index()?;
        self.upper.index()?;
        if self.lower.f != 1 || self.upper.f != 2 {
            return Err(Error::Config(format!(
                "pulse must couple an F = 1 level to an F = 2 level, got {} -> {}",
                self.lower, self.upper
            )));
        }
        if !(self.angle.is_finite() && self.phase.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite pulse parameters {self:?}"
            )));
        }
        Ok(())
    }

    fn apply(&self, e: &mut ExtendedAmplitudes) {
        let (c, s) = ((0.5 * self.angle).cos(), (0.5 * self.angle).sin());
        let minus_i = C64::new(0.0, -1.0);
        let (l, u) = (e.get(self.lower), e.get(self.upper));
        e.set(
            self.lower,
            c * l + minus_i * C64::from_polar(s, -self.phase) * u,
        );
        e.set(
            self.upper,
            minus_i * C64::from_polar(s, self.phase) * l + c * u,
        );
    }
}

/// Microwave measurement program: a list of steps, each a set of pulses on
/// disjoint level pairs that act simultaneously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseProgram {
    pub version: String,
    pub steps: Vec<Vec<Pulse>>,
}

impl PulseProgram {
    pub const DEFAULT_VERSION: &'static str = "seven-pulse-v1";

    /// Seven pulses splitting the pump equally (`eps1 = eps2 = 1/sqrt2`).
    pub fn default_sequence() -> Self {
        Self::for_splitting(
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        )
        .expect("equal split is reachable")
    }

    /// Seven-pulse program realizing pump amplitudes `eps1` in `(2,-1)` and
    /// `eps2` in `(2,+1)`.
    ///
    /// Pulses 1 and 3 transfer an amplitude `sin(Phi1/2)` of `(1,0)` into
    /// `(2,-1)` and pulse 2 transfers `sin(Phi2/2)` into `(2,+1)`, giving
    /// `eps2 = cos(Phi1/2) sin(Phi2/2)` and
    /// `eps1 = sin(Phi1/2) cos(Phi1/2) (1 + cos(Phi2/2))`. For each `Phi2`
    /// the first relation fixes `Phi1`; the second is then solved by bisection
    /// on the rising branch of `eps1(Phi2)`.
    pub fn for_splitting(eps1: f64, eps2: f64) -> Result<Self> {
        if !(eps1 > 0.0 && eps2 > 0.0 && eps1 * eps1 + eps2 * eps2 <= 1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "unreachable pump split eps1 = {eps1}, eps2 = {eps2}"
            )));
        }
        let phi2_min = 2.0 * eps2.min(1.0).asin();
        let eps1_of = |phi2: f64| {
            let (s2, c2) = ((0.5 * phi2).sin(), (0.5 * phi2).cos());
            let c1 = (eps2 / s2).min(1.0);
            let s1 = (1.0 - c1 * c1).sqrt();
            (s1 * c1 * (1.0 + c2), c1)
        };
        // Locate the maximum of eps1 on [phi2_min, pi] by golden section.
        let (mut a, mut b) = (phi2_min, PI);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if eps1_of(x1).0 < eps1_of(x2).0 {
                a = x1;
            } else {
                b = x2;
            }
        }
        let peak = 0.5 * (a + b);
        if eps1_of(peak).0 < eps1 - 1e-12 {
            return Err(Error::Config(format!(
                "eps1 = {eps1} exceeds the largest value {} reachable with eps2 = {eps2}",
                eps1_of(peak).0
            )));
        }
        let (mut lo, mut hi) = (phi2_min, peak);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eps1_of(mid).0 < eps1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let phi2 = 0.5 * (lo + hi);
        let phi1 = 2.0 * eps1_of(phi2).1.acos();
        Ok(Self::seven_pulse(phi1, phi2))
    }

    fn seven_pulse(phi1: f64, phi2: f64) -> Self {
        let l = Level::new;
        let p = Pulse::new;
        PulseProgram {
            version: Self::DEFAULT_VERSION.into(),
            steps: vec![
                // (1,-1) parked in the ancilla; part of the pump into (2,-1).
                vec![
                    p(l(1, -1), l(2, 0), PI, 0.0),
                    p(l(1, 0), l(2, -1), phi1, FRAC_PI_2),
                ],
                // 50/50 beam splitter forming a_S and a_A; pump share into (2,+1).
                vec![
                    p(l(1, 1), l(2, 0), FRAC_PI_2, 0.0),
                    p(l(1, 0), l(2, 1), phi2, FRAC_PI_2),
                ],
                // Ancilla back to (1,-1); second pump share into (2,-1).
                vec![
                    p(l(1, -1), l(2, 0), PI, PI),
                    p(l(1, 0), l(2, -1), phi1, FRAC_PI_2),
                ],
                // Homodyne beam splitters between each signal and its pump.
                vec![p(l(1, -1), l(2, -1), FRAC_PI_2, PI)],
                vec![p(l(1, 1), l(2, 1), FRAC_PI_2, FRAC_PI_2)],
                // Park the remaining F = 1 signal atoms in (2,-+2) for imaging.
                vec![p(l(1, -1), l(2, -2), PI, FRAC_PI_2)],
                vec![p(l(1, 1), l(2, 2), PI, FRAC_PI_2)],
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Config("pulse program has no steps".into()));
        }
        for (k, step) in self.steps.iter().enumerate() {
            let mut used = HashSet::new();
            for pulse in step {
                pulse.validate()?;
                if !used.insert(pulse.lower) || !used.insert(pulse.upper) {
                    return Err(Error::Config(format!(
                        "step {k}: concurrent pulses share a level"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: PulseProgram = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("malformed pulse program: {e}")))?;
        p.validate()?;
        Ok(p)
    }
}

/// Applies every pulse of `program` in order.
pub fn pulse_sequence(
    state: &ExtendedAmplitudes,
    program: &PulseProgram,
) -> Result<ExtendedAmplitudes> {
    program.validate()?;
    let mut e = *state;
    for step in &program.steps {
        for pulse in step {
            pulse.apply(&mut e);
        }
    }
    Ok(e)
}

/// Measurement through the explicit pulse layer. Crosstalk and pump-phase
/// noise live in the ideal layer only; this path adds detection noise.
pub fn measure_with_pulses<R: Rng + ?Sized>(
    psi: &ModeAmplitudes,
    program: &PulseProgram,
    noise: &NoiseConfig,
    shot: u64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let out = pulse_sequence(&ExtendedAmplitudes::from_modes(psi), program)?;
    Ok(readout(&out, noise, shot, rng))
}

#[cfg(test)]
mod tests {
    use super::super::ideal::{homodyne_outputs, split_pump, split_signal};
    use super::*;
    use crate::rng::seed_derive;
    use proptest::prelude::*;

    fn ideal_layer(psi: &ModeAmplitudes, eps1: f64, eps2: f64) -> ExtendedAmplitudes {
        let noise = NoiseConfig {
            eps1,
            eps2,
            ..NoiseConfig::ideal()
        };
        let (a_s, a_a) = split_signal(psi);
        let (p1, p2, r) = split_pump(psi.zero, &noise, &mut seed_derive(0, "x", 0).rng());
        homodyne_outputs(a_s, a_a, p1, p2, r)
    }

    fn random_modes(v: &[f64]) -> ModeAmplitudes {
        ModeAmplitudes::new(
            C64::new(v[0], v[1]),
            C64::new(v[2], v[3]),
            C64::new(v[4], v[5]),
        )
    }

    #[test]
    fn pi_pulse_transfers_fully() {
        let mut e = ExtendedAmplitudes::zero();
        e.set(Level::new(1, -1), C64::new(3.0, 0.0));
        Pulse::new(Level::new(1, -1), Level::new(2, 0), PI, 0.0).apply(&mut e);
        assert!(e.get(Level::new(1, -1)).norm() < 1e-15);
        assert!((e.population(Level::new(2, 0)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn half_pulse_forms_signal_modes() {
        // After parking (1,-1) in (2,0), a pi/2 pulse mixes it with (1,+1).
        let psi = ModeAmplitudes::new(C64::new(1.0, 0.2), C64::new(0.0, 0.0), C64::new(-0.4, 0.7));
        let mut e = ExtendedAmplitudes::from_modes(&psi);
        Pulse::new(Level::new(1, -1), Level::new(2, 0), PI, 0.0).apply(&mut e);
        Pulse::new(Level::new(1, 1), Level::new(2, 0), FRAC_PI_2, 0.0).apply(&mut e);
        let (a_s, a_a) = split_signal(&psi);
        let pops = [
            e.population(Level::new(1, 1)),
            e.population(Level::new(2, 0)),
        ];
        let mut expected = [a_s.norm_sqr(), a_a.norm_sqr()];
        let mut got = pops;
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        assert!((got[0] - expected[0]).abs() < 1e-12 && (got[1] - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn default_angles() {
        let p = PulseProgram::default_sequence();
        // The equal split sits at the maximum of eps1(Phi2), where the root
        // is only determined to about sqrt(machine epsilon).
        assert!((p.steps[0][1].angle - 2.0 * (1.0 / 2f64.sqrt()).atan()).abs() < 1e-7);
        assert!((p.steps[1][1].angle - 2.0 * PI / 3.0).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn default_program_equals_ideal_layer(v in proptest::collection::vec(-50.0f64..50.0, 6)) {
            let psi = random_modes(&v);
            let seq = pulse_sequence(&ExtendedAmplitudes::from_modes(&psi), &PulseProgram::default_sequence()).unwrap();
            let ideal = ideal_layer(&psi, std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
            for k in 0..8 {
                prop_assert!((seq.amps[k] - ideal.amps[k]).norm() < 1e-6, "slot {k}");
            }
            prop_assert!((seq.total() - psi.total()).abs() < 1e-10 * psi.total().max(1.0));
        }

        #[test]
        fn solved_program_reaches_requested_split(e1 in 0.2f64..0.75, e2 in 0.2f64..0.65, v in proptest::collection::vec(-50.0f64..50.0, 6)) {
            prop_assume!(e1 * e1 + e2 * e2 <= 0.95);
            let program = match PulseProgram::for_splitting(e1, e2) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let psi = random_modes(&v);
            let seq = pulse_sequence(&ExtendedAmplitudes::from_modes(&psi), &program).unwrap();
            let ideal = ideal_layer(&psi, e1, e2);
            for level in [Level::new(2, -2), Level::new(2, -1), Level::new(2, 1), Level::new(2, 2)] {
                prop_assert!((seq.get(level) - ideal.get(level)).norm() < 1e-6, "{level}");
            }
            prop_assert!((seq.population(Level::new(1, 0)) - ideal.population(Level::new(1, 0))).abs() < 1e-6);
        }
    }

    #[test]
    fn malformed_programs_rejected() {
        let bad_level = r#"{"version":"x","steps":[[{"lower":{"f":1,"m":2},"upper":{"f":2,"m":0},"angle":1.0}]]}"#;
        assert!(matches!(
            PulseProgram::from_json(bad_level),
            Err(Error::Config(_))
        ));
        let same_manifold = r#"{"version":"x","steps":[[{"lower":{"f":1,"m":0},"upper":{"f":1,"m":1},"angle":1.0}]]}"#;
        assert!(PulseProgram::from_json(same_manifold).is_err());
        let overlap = r#"{"version":"x","steps":[[{"lower":{"f":1,"m":0},"upper":{"f":2,"m":1},"angle":1.0},{"lower":{"f":1,"m":0},"upper":{"f":2,"m":-1},"angle":1.0}]]}"#;
        assert!(PulseProgram::from_json(overlap).is_err());
        assert!(PulseProgram::from_json("not json").is_err());
        let default = serde_json::to_string(&PulseProgram::default_sequence()).unwrap();
        assert_eq!(
            PulseProgram::from_json(&default).unwrap(),
            PulseProgram::default_sequence()
        );
    }

    #[test]
    fn unreachable_split_rejected() {
        assert!(PulseProgram::for_splitting(0.8, 0.8).is_err());
        assert!(PulseProgram::for_splitting(0.0, 0.5).is_err());
    }
}
