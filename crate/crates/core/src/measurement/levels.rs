use std::fmt;

use serde::{Deserialize, Serialize};

use crate::twa::ModeAmplitudes;
use crate::{Error, Result, C64};

/// A hyperfine Zeeman sublevel `|F, m>` of the F = 1 or F = 2 manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    pub f: u8,
    pub m: i8,
}

impl Level {
    pub const fn new(f: u8, m: i8) -> Self {
        Level { f, m }
    }

    /// Storage slot in [`ExtendedAmplitudes`], or an error for a level that
    /// does not exist.
    pub fn index(self) -> Result<usize> {
        match (self.f, self.m) {
            (1, m @ -1..=1) => Ok((m + 1) as usize),
            (2, m @ -2..=2) => Ok((m + 5) as usize),
            _ => Err(Error::Config(format!("no such level {self}"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{:+})", self.f, self.m)
    }
}

/// Amplitudes of all eight F = 1 and F = 2 sublevels.
///
/// Slots are ordered `(1,-1), (1,0), (1,+1), (2,-2), (2,-1), (2,0), (2,+1), (2,+2)`.
/// `(2,0)` serves as the ancilla of the measurement pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedAmplitudes {
    pub amps: [C64; 8],
}

impl ExtendedAmplitudes {
    pub const LEVELS: [Level; 8] = [
        Level::new(1, -1),
        Level::new(1, 0),
        Level::new(1, 1),
        Level::new(2, -2),
        Level::new(2, -1),
        Level::new(2, 0),
        Level::new(2, 1),
        Level::new(2, 2),
    ];

    pub fn zero() -> Self {
        ExtendedAmplitudes {
            amps: [C64::new(0.0, 0.0); 8],
        }
    }

    /// F = 1 populated from a spin-1 state, F = 2 empty.
    pub fn from_modes(psi: &ModeAmplitudes) -> Self {
        let mut e = Self::zero();
        e.amps[0] = psi.minus;
        e.amps[1] = psi.zero;
        e.amps[2] = psi.plus;
        e
    }

    pub fn get(&self, level: Level) -> C64 {
        self.amps[level.index().expect("valid level")]
    }

    pub fn set(&mut self, level: Level, value: C64) {
        self.amps[level.index().expect("valid level")] = value;
    }

    pub fn population(&self, level: Level) -> f64 {
        self.get(level).norm_sqr()
    }

    pub fn total(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}
