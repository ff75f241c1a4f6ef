use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::C64;

/// Classical field amplitudes `(psi_+1, psi_0, psi_-1)` of one trajectory,
/// in units of sqrt(atoms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub plus: C64,
    pub zero: C64,
    pub minus: C64,
}

impl ModeAmplitudes {
    pub fn new(plus: C64, zero: C64, minus: C64) -> Self {
        ModeAmplitudes { plus, zero, minus }
    }

    /// Noise-free polar configuration `(0, sqrt(N), 0)`.
    pub fn polar(n_atoms: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        ModeAmplitudes::new(z, C64::new(n_atoms.sqrt(), 0.0), z)
    }

    /// Components ordered `(+1, 0, -1)`.
    pub fn to_array(self) -> [C64; 3] {
        [self.plus, self.zero, self.minus]
    }

    pub fn from_array(a: [C64; 3]) -> Self {
        ModeAmplitudes::new(a[0], a[1], a[2])
    }

    pub fn total(&self) -> f64 {
        self.plus.norm_sqr() + self.zero.norm_sqr() + self.minus.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.plus.is_finite() && self.zero.is_finite() && self.minus.is_finite()
    }

    pub fn scale(self, s: f64) -> Self {
        ModeAmplitudes::new(self.plus * s, self.zero * s, self.minus * s)
    }
}

impl std::ops::Add for ModeAmplitudes {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ModeAmplitudes::new(self.plus + o.plus, self.zero + o.zero, self.minus + o.minus)
    }
}

/// Weyl symbols of the spin-1 observables evaluated on one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub qyz: f64,
    pub qxz: f64,
    pub qxx: f64,
    pub qyy: f64,
    pub qzz: f64,
    pub n_plus: f64,
    pub n_zero: f64,
    pub n_minus: f64,
}

/// Substitutes `a_m -> psi_m` into the one-body operator definitions.
/// Populations are returned raw; the ordering offset is applied at ensemble level.
pub fn classical_observables(psi: &ModeAmplitudes) -> Observables {
    let (p, z, m) = (psi.plus, psi.zero, psi.minus);
    let (np, nz, nm) = (p.norm_sqr(), z.norm_sqr(), m.norm_sqr());
    let sym = z.conj() * (p + m);
    let anti = z.conj() * (p - m);
    let pm = (m.conj() * p).re;
    Observables {
        lx: SQRT_2 * sym.re,
        ly: -SQRT_2 * anti.im,
        lz: np - nm,
        qyz: -SQRT_2 * sym.im,
        qxz: SQRT_2 * anti.re,
        qxx: 2.0 / 3.0 * nz - (np + nm) / 3.0 + 2.0 * pm,
        qyy: 2.0 / 3.0 * nz - (np + nm) / 3.0 - 2.0 * pm,
        qzz: 2.0 / 3.0 * (np + nm) - 4.0 / 3.0 * nz,
        n_plus: np,
        n_zero: nz,
        n_minus: nm,
    }
}
