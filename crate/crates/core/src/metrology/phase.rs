use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::twa::{ModeAmplitudes, PreQuench, SimConfig};
use crate::C64;

/// Encoded phases `(phi1, phi2)`, equivalently `alpha (cos Theta, sin Theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub phi1: f64,
    pub phi2: f64,
}

impl PhasePoint {
    pub fn new(phi1: f64, phi2: f64) -> Self {
        PhasePoint { phi1, phi2 }
    }

    pub fn from_polar(alpha: f64, theta: f64) -> Self {
        PhasePoint::new(alpha * theta.cos(), alpha * theta.sin())
    }

    /// Rotation magnitude, `alpha >= 0`.
    pub fn alpha(&self) -> f64 {
        self.phi1.hypot(self.phi2)
    }

    /// Rotation-axis angle in `[0, 2 pi)`; zero for the origin.
    pub fn theta(&self) -> f64 {
        if self.alpha() == 0.0 {
            return 0.0;
        }
        let t = self.phi2.atan2(self.phi1).rem_euclid(TAU);
        if t >= TAU {
            0.0
        } else {
            t
        }
    }
}

/// Applies `exp(-i (phi1 F_x + phi2 F_y))` to the spin-1 amplitudes.
///
/// For spin 1, `(n.F)^3 = n.F`, so the exponential is
/// `1 - i sin(alpha) n.F - (1 - cos alpha) (n.F)^2`.
pub fn encode_phases(psi: &ModeAmplitudes, p: PhasePoint) -> ModeAmplitudes {
    let alpha = p.alpha();
    if alpha == 0.0 {
        return *psi;
    }
    let g = generator(p.phi1 / alpha, p.phi2 / alpha);
    let g2 = matmul(&g, &g);
    let (s, c) = alpha.sin_cos();
    let mut u = [[C64::new(0.0, 0.0); 3]; 3];
    for (r, row) in u.iter_mut().enumerate() {
        for (k, x) in row.iter_mut().enumerate() {
            let id = if r == k { 1.0 } else { 0.0 };
            *x = C64::new(id, 0.0) - C64::new(0.0, s) * g[r][k] - (1.0 - c) * g2[r][k];
        }
    }
    let v = psi.to_array();
    let mut out = [C64::new(0.0, 0.0); 3];
    for r in 0..3 {
        out[r] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2];
    }
    ModeAmplitudes::from_array(out)
}

/// `n_x F_x + n_y F_y` in the `(+1, 0, -1)` basis.
fn generator(nx: f64, ny: f64) -> [[C64; 3]; 3] {
    let up = C64::new(nx, -ny) * FRAC_1_SQRT_2;
    let down = up.conj();
    let z = C64::new(0.0, 0.0);
    [[z, up, z], [down, z, up], [z, down, z]]
}

fn matmul(a: &[[C64; 3]; 3], b: &[[C64; 3]; 3]) -> [[C64; 3]; 3] {
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// `psi_0 -> psi_0 e^{-i theta}`, rotating both nematic quadrature pairs:
/// `Q_yz -> cos Q_yz - sin L_x`, `Q_xz -> cos Q_xz + sin L_y`.
pub fn spinor_phase_rotation(psi: &ModeAmplitudes, theta: f64) -> ModeAmplitudes {
    ModeAmplitudes::new(psi.plus, psi.zero * C64::from_polar(1.0, -theta), psi.minus)
}

/// Rotation that brings the squeezed quadrature generated at `q = |c2|` onto
/// `Q_yz` and `Q_xz`: `-pi/4` for ferromagnetic (`c2 < 0`), `+pi/4` otherwise.
pub fn alignment_angle(c2: f64) -> f64 {
    if c2 < 0.0 {
        -FRAC_PI_4
    } else {
        FRAC_PI_4
    }
}

/// Ratio of the pre-quench quadratic Zeeman shift to `|c2|`.
pub const PRE_QUENCH_RATIO: f64 = 13.0;

/// Two-stage q program: hold at `13 |c2|` for `hold` seconds, then
/// switch to `q0` (with the configured compensation ramp). A zero hold
/// leaves a constant `q0` from the start.
pub fn quench_schedule(base: &SimConfig, hold: f64) -> SimConfig {
    let mut c = base.clone();
    c.pre_quench = (hold > 0.0).then(|| PreQuench {
        q: PRE_QUENCH_RATIO * base.c2.abs(),
        duration: hold,
    });
    c
}
